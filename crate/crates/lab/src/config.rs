//! `key = value` experiment configs.
//!
//! ```text
//! # uniqueness sweep
//! experiment = uniqueness
//! metric = euclidean
//! class = 1,0
//! t_values = 0, 0.05, 0.1, 0.2
//! num_starts = 50
//! ```
//!
//! Coefficient fields take a constant and optional Fourier modes:
//! `g11 = 1.2` and `g11.mode_1,0 = 0.1,0` give `1.2 + 0.1 cos(2 pi x)`. Modes of
//! the conformal factor are written `mode_kx,ky = cos,sin` (or
//! `lambda.mode_kx,ky`), its constant part `lambda = c`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use finsler_core::fourier::{ConformalFactor, FourierMode};
use finsler_core::metric::{FinslerMetric, RiemannianField};
use finsler_core::solver::{SolverConfig, StepRule};
use finsler_core::Winding;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Core(#[from] finsler_core::Error),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentId {
    Uniqueness,
    CsProperty,
    SpeedCap,
    ManePolytope,
    Consistency,
    Semicontinuity,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        Self::Uniqueness,
        Self::CsProperty,
        Self::SpeedCap,
        Self::ManePolytope,
        Self::Consistency,
        Self::Semicontinuity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniqueness => "uniqueness",
            Self::CsProperty => "cs-property",
            Self::SpeedCap => "speed-cap",
            Self::ManePolytope => "mane-polytope",
            Self::Consistency => "consistency",
            Self::Semicontinuity => "semicontinuity",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}` (expected one of {})", Self::ALL.map(Self::name).join(", ")))
    }
}

/// Conformal bump added on top of the base metric in the uniqueness sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bump {
    /// `1 + t sin^2(pi (y - 1/4))`: a single trough at `y = 1/4`.
    Sin2Shifted,
    /// `1 + t cos^2(2 pi (y - 1/4))`: troughs at `y = 0` and `y = 1/2`.
    Cos2Shifted,
    /// `1 + t cos^2(2 pi y)`: troughs at `y = 1/4` and `y = 3/4`.
    Cos2,
}

impl Bump {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sin2Shifted => "sin2_shifted",
            Self::Cos2Shifted => "cos2_shifted",
            Self::Cos2 => "cos2",
        }
    }

    /// The factor for amplitude `t`, as a Fourier series.
    pub fn factor(self, t: f64) -> ConformalFactor {
        let half = 0.5 * t;
        let mode = match self {
            Self::Sin2Shifted => FourierMode::new(0, 1, 0.0, -half),
            Self::Cos2Shifted => FourierMode::new(0, 2, -half, 0.0),
            Self::Cos2 => FourierMode::new(0, 2, half, 0.0),
        };
        ConformalFactor::new(1.0 + half, [mode]).expect("finite coefficients")
    }
}

impl FromStr for Bump {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Self::Sin2Shifted, Self::Cos2Shifted, Self::Cos2]
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown bump `{s}` (expected sin2_shifted, cos2_shifted or cos2)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManeParams {
    pub max_dim: usize,
    pub max_vertices: usize,
    /// `eps` as a fraction of the polytope diameter.
    pub eps_rel: f64,
    pub delta: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub metric: FinslerMetric,
    /// Whether the file names a metric. Sampling experiments draw random
    /// metrics otherwise.
    pub metric_given: bool,
    pub class: Winding,
    pub classes: Vec<Winding>,
    pub solver: SolverConfig,
    pub bump: Bump,
    pub t_values: Vec<f64>,
    /// Expected mean height of the unique minimizer; the brute-force
    /// oracle's height when absent.
    pub target_height: Option<f64>,
    pub mane: ManeParams,
    /// Loops (cs-property), triples (consistency) or polytopes (semicontinuity).
    pub samples: usize,
    pub resolution: usize,
    pub halvings: usize,
    pub tail_from: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Every recognised key with its value as written, in key order.
    pub entries: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "experiment",
    "metric",
    "g11",
    "g12",
    "g22",
    "beta_x",
    "beta_y",
    "lambda",
    "class",
    "classes",
    "vertices",
    "max_iters",
    "grad_tol",
    "num_starts",
    "cluster_tol",
    "jitter",
    "initial_step",
    "shrink",
    "sufficient_decrease",
    "bump",
    "t_values",
    "target_height",
    "max_dim",
    "max_vertices",
    "eps_rel",
    "delta",
    "trials",
    "samples",
    "resolution",
    "halvings",
    "tail_from",
    "out",
    "seed",
];

const FIELDS: [&str; 6] = ["g11", "g12", "g22", "beta_x", "beta_y", "lambda"];

/// Parses `key = value` lines; later lines override earlier ones.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (normalize_key(key.trim()), value.trim().to_string());
        check_key(&key)?;
        entries.insert(key, value);
    }
    Ok(entries)
}

/// Bare `mode_kx,ky` lines belong to the conformal factor.
fn normalize_key(key: &str) -> String {
    let key: String = key.split_whitespace().collect();
    if key.starts_with("mode_") {
        format!("lambda.{key}")
    } else {
        key
    }
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        return Ok(());
    }
    if let Some((field, mode)) = key.split_once('.') {
        if FIELDS.contains(&field) && mode.starts_with("mode_") {
            parse_mode_key(key, mode)?;
            return Ok(());
        }
    }
    Err(ConfigError::UnknownKey(key.to_string()))
}

fn parse_mode_key(key: &str, mode: &str) -> Result<(i32, i32)> {
    let bad = |message: String| ConfigError::Value { key: key.to_string(), message };
    let (kx, ky) = mode["mode_".len()..].split_once(',').ok_or_else(|| bad("mode needs `kx,ky`".into()))?;
    let kx = kx.trim().parse::<i32>().map_err(|e| bad(e.to_string()))?;
    let ky = ky.trim().parse::<i32>().map_err(|e| bad(e.to_string()))?;
    Ok((kx, ky))
}

/// Applies `key=value` overrides on top of parsed entries.
pub fn apply_overrides(entries: &mut BTreeMap<String, String>, overrides: &[String]) -> Result<()> {
    for (i, o) in overrides.iter().enumerate() {
        let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("override `{o}` is not `key=value`"),
        })?;
        let key = normalize_key(key.trim());
        check_key(&key)?;
        entries.insert(key, value.trim().to_string());
    }
    Ok(())
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Value { key: key.into(), message: e.to_string() }),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.entries.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_floats(v).map_err(|message| ConfigError::Value { key: key.into(), message }),
        }
    }

    fn class(&self, key: &str, default: Winding) -> Result<Winding> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => parse_class(v).map_err(|message| ConfigError::Value { key: key.into(), message }),
        }
    }

    /// Constant plus `field.mode_kx,ky` modes.
    fn factor(&self, field: &str, default: f64) -> Result<ConformalFactor> {
        let offset = self.get(field, default)?;
        let prefix = format!("{field}.mode_");
        let mut modes = Vec::new();
        for (key, value) in self.entries.range(prefix.clone()..) {
            if !key.starts_with(&prefix) {
                break;
            }
            let (kx, ky) = parse_mode_key(key, &key[field.len() + 1..])?;
            let coeffs = parse_floats(value).map_err(|message| ConfigError::Value { key: key.clone(), message })?;
            let [c, s] = coeffs[..] else {
                return Err(ConfigError::Value { key: key.clone(), message: "expected `cos,sin`".into() });
            };
            modes.push(FourierMode::new(kx, ky, c, s));
        }
        Ok(ConformalFactor::new(offset, modes)?)
    }

    fn has_field(&self, field: &str) -> bool {
        let prefix = format!("{field}.");
        self.entries.keys().any(|k| k == field || k.starts_with(&prefix))
    }
}

fn parse_floats(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"))).collect()
}

fn parse_class(v: &str) -> std::result::Result<Winding, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [p, q] = parts[..] else {
        return Err(format!("class `{v}` is not `p,q`"));
    };
    let p = p.parse::<i64>().map_err(|e| e.to_string())?;
    let q = q.parse::<i64>().map_err(|e| e.to_string())?;
    Ok((p, q))
}

fn build_metric(r: &Reader) -> Result<FinslerMetric> {
    let kind: String = r.get("metric", "euclidean".to_string())?;
    let field = RiemannianField::new(r.factor("g11", 1.0)?, r.factor("g12", 0.0)?, r.factor("g22", 1.0)?)?;
    let base = match kind.as_str() {
        "euclidean" => {
            if ["g11", "g12", "g22", "beta_x", "beta_y"].iter().any(|f| r.has_field(f)) {
                return Err(ConfigError::Value { key: "metric".into(), message: "euclidean takes no coefficient fields".into() });
            }
            FinslerMetric::euclidean()
        }
        "riemannian" => FinslerMetric::riemannian(field),
        "randers" => FinslerMetric::randers(field, [r.factor("beta_x", 0.0)?, r.factor("beta_y", 0.0)?])?,
        other => {
            return Err(ConfigError::Value {
                key: "metric".into(),
                message: format!("`{other}` is not euclidean, riemannian or randers"),
            })
        }
    };
    if r.has_field("lambda") {
        Ok(base.conformal_scale(&r.factor("lambda", 1.0)?)?)
    } else {
        Ok(base)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(parse_entries(text)?)
    }

    pub fn from_entries(entries: BTreeMap<String, String>) -> Result<Self> {
        let r = Reader { entries: &entries };
        let experiment = r
            .entries
            .get("experiment")
            .ok_or(ConfigError::Missing("experiment"))?
            .parse::<ExperimentId>()
            .map_err(|message| ConfigError::Value { key: "experiment".into(), message })?;
        let defaults = SolverConfig::default();
        let rule = StepRule::default();
        let solver = SolverConfig {
            vertices: r.get("vertices", defaults.vertices)?,
            max_iters: r.get("max_iters", defaults.max_iters)?,
            step_rule: StepRule {
                initial_step: r.get("initial_step", rule.initial_step)?,
                shrink: r.get("shrink", rule.shrink)?,
                sufficient_decrease: r.get("sufficient_decrease", rule.sufficient_decrease)?,
            },
            grad_tol: r.get("grad_tol", defaults.grad_tol)?,
            num_starts: r.get("num_starts", defaults.num_starts)?,
            cluster_tol: r.get("cluster_tol", defaults.cluster_tol)?,
            jitter: r.get("jitter", defaults.jitter)?,
            seed: 0,
        };
        solver.validate()?;
        let classes = match entries.get("classes") {
            None => vec![(1, 0), (1, 1), (2, 1), (3, 4)],
            Some(v) => v
                .split(';')
                .map(parse_class)
                .collect::<std::result::Result<_, _>>()
                .map_err(|message| ConfigError::Value { key: "classes".into(), message })?,
        };
        let config = Self {
            experiment,
            metric: build_metric(&r)?,
            metric_given: r.has_field("metric") || FIELDS.iter().any(|f| r.has_field(f)),
            class: r.class("class", (1, 0))?,
            classes,
            solver,
            bump: r.get("bump", Bump::Sin2Shifted)?,
            t_values: r.list("t_values", &[0.0, 0.05, 0.1, 0.2])?,
            target_height: entries
                .get("target_height")
                .map(|v| v.parse::<f64>())
                .transpose()
                .map_err(|e| ConfigError::Value { key: "target_height".into(), message: e.to_string() })?,
            mane: ManeParams {
                max_dim: r.get("max_dim", 8)?,
                max_vertices: r.get("max_vertices", 40)?,
                eps_rel: r.get("eps_rel", 1e-3)?,
                delta: r.get("delta", 0.1)?,
                trials: r.get("trials", 100)?,
            },
            samples: r.get("samples", 100)?,
            resolution: r.get("resolution", finsler_core::bridge::DEFAULT_RESOLUTION)?,
            halvings: r.get("halvings", 20)?,
            tail_from: r.get("tail_from", 10)?,
            out: entries.get("out").map(PathBuf::from),
            seed: r.get("seed", 0)?,
            entries: entries.clone(),
        };
        config.check_ranges()?;
        Ok(config)
    }

    fn check_ranges(&self) -> Result<()> {
        let bad = |key: &str, message: &str| Err(ConfigError::Value { key: key.into(), message: message.into() });
        if self.class == (0, 0) || self.classes.contains(&(0, 0)) {
            return bad("class", "the trivial class (0,0) has no shortest loop");
        }
        if self.t_values.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("t_values", "amplitudes must be finite and nonnegative");
        }
        if self.mane.max_dim == 0 {
            return bad("max_dim", "polytope dimension must be positive");
        }
        if !(self.mane.eps_rel > 0.0) || !(self.mane.delta > 0.0) {
            return bad("eps_rel", "eps_rel and delta must be positive");
        }
        if self.resolution < finsler_core::bridge::MIN_RESOLUTION {
            return bad("resolution", "grid resolution must be at least 8");
        }
        if self.mane.max_vertices < 2 {
            return bad("max_vertices", "polytopes need at least 2 vertices");
        }
        if self.tail_from == 0 || self.tail_from > self.halvings {
            return bad("tail_from", "tail must start at a scale index in 1..=halvings");
        }
        if self.samples == 0 {
            return bad("samples", "at least one sample is required");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use finsler_core::metric::Point;
    use nalgebra::Vector2;

    #[test]
    fn parses_a_randers_config() {
        let text = "\
experiment = speed-cap   # trailing comment
metric = randers
beta_x = 0.3
beta_x.mode_0,1 = 0.05, 0
classes = 1,0; -1,0
num_starts = 4
seed = 9
";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.experiment, ExperimentId::SpeedCap);
        assert_eq!(c.classes, vec![(1, 0), (-1, 0)]);
        assert_eq!(c.solver.num_starts, 4);
        assert_eq!(c.seed, 9);
        let f = c.metric.speed(&Point::new(0.0, 0.0), &Vector2::new(1.0, 0.0));
        assert!((f - 1.35).abs() < 1e-12);
    }

    #[test]
    fn bare_modes_belong_to_lambda() {
        let c = ExperimentConfig::parse("experiment = uniqueness\nlambda = 1\nmode_0,1 = 0.2,0\n").unwrap();
        let f = c.metric.speed(&Point::zeros(), &Vector2::new(1.0, 0.0));
        assert!((f - 1.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn overrides_win() {
        let mut entries = parse_entries("experiment = uniqueness\nnum_starts = 50\n").unwrap();
        apply_overrides(&mut entries, &["num_starts=7".into(), "bump = cos2_shifted".into()]).unwrap();
        let c = ExperimentConfig::from_entries(entries).unwrap();
        assert_eq!(c.solver.num_starts, 7);
        assert_eq!(c.bump, Bump::Cos2Shifted);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("metric = euclidean\n"), Err(ConfigError::Missing("experiment"))));
        assert!(matches!(ExperimentConfig::parse("experiment = nope\n"), Err(ConfigError::Value { .. })));
        assert!(matches!(ExperimentConfig::parse("experiment = uniqueness\nfoo = 1\n"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::parse("experiment = uniqueness\nno equals sign\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(ExperimentConfig::parse("experiment = uniqueness\nclass = 0,0\n").is_err());
        assert!(ExperimentConfig::parse("experiment = uniqueness\nvertices = 8\n").is_err());
        assert!(ExperimentConfig::parse("experiment = uniqueness\nmetric = randers\nbeta_x = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("experiment = uniqueness\nlambda = -1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = uniqueness\nbeta_x = 0.1\n").is_err());
    }

    #[test]
    fn bumps_have_the_stated_troughs() {
        let at = |b: Bump, y: f64| b.factor(0.2).value(&Point::new(0.0, y));
        assert!((at(Bump::Sin2Shifted, 0.25) - 1.0).abs() < 1e-15);
        assert!((at(Bump::Sin2Shifted, 0.75) - 1.2).abs() < 1e-15);
        assert!((at(Bump::Cos2Shifted, 0.0) - 1.0).abs() < 1e-15);
        assert!((at(Bump::Cos2Shifted, 0.5) - 1.0).abs() < 1e-15);
        assert!((at(Bump::Cos2, 0.25) - 1.0).abs() < 1e-15);
        assert!((at(Bump::Cos2, 0.0) - 1.2).abs() < 1e-15);
    }
}
