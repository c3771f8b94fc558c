//! Argmin sets of linear functionals over convex polytopes.
//!
//! `K` is the convex hull of finitely many points of `R^n` and the functionals
//! are the linear forms `x -> f . x`, so the coordinate functionals separate
//! points of `K`. A linear form attains its minimum `m(f)` on a face of `K`,
//! and that face is spanned by the vertices where the minimum is attained;
//! its diameter is the diameter of those vertices. Everything below works on
//! vertex index sets.
//!
//! [`shrink_argmin`] perturbs `f` to `f + t g`, where `g` exposes a single
//! vertex of the current argmin face, and decreases `t` until the argmin set
//! has diameter at most `eps`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    vertices: Vec<DVector<f64>>,
}

impl ConvexBody {
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).ok_or_else(|| Error::InputDomain("convex body needs a vertex".into()))?;
        if dim == 0 {
            return Err(Error::InputDomain("dimension must be positive".into()));
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InputDomain("vertices of mixed dimension".into()));
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InputDomain("non-finite vertex coordinate".into()));
        }
        Ok(Self { vertices })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    /// One vertex per line, comma separated; `#` starts a comment.
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::from_rows(&parse_rows(text)?)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn diameter(&self) -> f64 {
        diameter_of(self.vertices.iter())
    }

    /// Hull of the selected vertices.
    pub fn sub_body(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.vertices[i].clone()).collect())
    }
}

fn diameter_of<'a>(points: impl Iterator<Item = &'a DVector<f64>> + Clone) -> f64 {
    let pts: Vec<&DVector<f64>> = points.collect();
    let mut best = 0.0_f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max((*a - *b).norm());
        }
    }
    best
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{c:?}: {e}"))))
                .collect()
        })
        .collect()
}

/// The linear form `x -> coefficients . x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    coefficients: DVector<f64>,
}

impl Functional {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InputDomain("non-finite functional coefficient".into()));
        }
        Ok(Self { coefficients: DVector::from_vec(coefficients) })
    }

    pub fn from_vector(coefficients: DVector<f64>) -> Result<Self> {
        Self::new(coefficients.iter().copied().collect())
    }

    pub fn zero(dim: usize) -> Self {
        Self { coefficients: DVector::zeros(dim) }
    }

    /// One functional per line.
    pub fn from_csv(text: &str) -> Result<Vec<Self>> {
        parse_rows(text)?.into_iter().map(Self::new).collect()
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> f64 {
        self.coefficients.dot(x)
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.norm()
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, other: &Self, t: f64) -> Self {
        Self { coefficients: &self.coefficients + &other.coefficients * t }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { coefficients: &self.coefficients * a }
    }
}

/// `m(f)` together with the vertices attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct ArgminSet {
    pub value: f64,
    pub active_vertices: Vec<usize>,
    pub diameter: f64,
}

fn check_dims(f: &Functional, body: &ConvexBody) -> Result<()> {
    if f.dim() != body.dim() {
        return Err(Error::InputDomain(format!("functional has dimension {}, body {}", f.dim(), body.dim())));
    }
    Ok(())
}

/// Minimum of `f` over `body` and the vertices within `tol (1 + |m|)` of it.
pub fn argmin_set(f: &Functional, body: &ConvexBody, tol: f64) -> Result<ArgminSet> {
    check_dims(f, body)?;
    let values: Vec<f64> = body.vertices().iter().map(|v| f.apply(v)).collect();
    let value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = value + tol * (1.0 + value.abs());
    let active_vertices: Vec<usize> = (0..values.len()).filter(|&i| values[i] <= cutoff).collect();
    let diameter = diameter_of(active_vertices.iter().map(|&i| &body.vertices()[i]));
    Ok(ArgminSet { value, active_vertices, diameter })
}

/// Numerical knobs shared by the constructions in this module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManeOptions {
    /// Relative tolerance of [`argmin_set`].
    pub tol: f64,
    /// Slack for the inequalities checked during the line search.
    pub assertion_tol: f64,
    pub redraw_budget: usize,
    pub max_halvings: usize,
}

impl Default for ManeOptions {
    fn default() -> Self {
        Self { tol: 1e-12, assertion_tol: 1e-9, redraw_budget: 64, max_halvings: 60 }
    }
}

fn unit_direction(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Draws unit directions until one has an argmin set of diameter at most
/// `eps` on `body`. For a polytope almost every direction exposes a single
/// vertex.
pub fn exposing_functional(body: &ConvexBody, eps: f64, seed: u64, opts: &ManeOptions) -> Result<Functional> {
    if !(eps > 0.0) {
        return Err(Error::InputDomain(format!("eps = {eps} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.redraw_budget {
        let g = Functional { coefficients: unit_direction(body.dim(), &mut rng) };
        if argmin_set(&g, body, opts.tol)?.diameter <= eps {
            return Ok(g);
        }
    }
    Err(Error::ConstructionFailure(opts.redraw_budget))
}

/// One tested `t` of [`shrink_argmin`].
#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchStep {
    pub t: f64,
    /// `m(f + t g)`.
    pub value: f64,
    /// `m(f) + t m_0(g)`, an upper bound for `value`.
    pub bound: f64,
    pub diameter: f64,
    /// Largest `g(x)` over the active vertices of `f + t g`.
    pub max_g_on_active: f64,
    pub bound_holds: bool,
    pub face_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub functional: Functional,
    pub t: f64,
    pub direction: Functional,
    /// `m(f)`.
    pub base_value: f64,
    /// `m_0(g)`: minimum of `g` over the argmin face of `f`.
    pub face_value: f64,
    pub initial_diameter: f64,
    pub diameter: f64,
    pub steps: Vec<LineSearchStep>,
}

impl Perturbation {
    pub fn assertions_hold(&self) -> bool {
        self.steps.iter().all(|s| s.bound_holds && s.face_bound_holds)
    }
}

/// Finds `f* = f + t g` with `|f* - f| <= delta` whose argmin set on `body`
/// has diameter at most `eps`.
///
/// `g` exposes a vertex of the face `M(f)` to within `eps / 2`; `t` runs over
/// `delta / (|g| 2^k)`. At every tested `t` the two inequalities
/// `m(f + t g) <= m(f) + t m_0(g)` and `g <= m_0(g)` on `M(f + t g)` are
/// recorded.
pub fn shrink_argmin(f: &Functional, body: &ConvexBody, eps: f64, delta: f64, seed: u64, opts: &ManeOptions) -> Result<Perturbation> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::InputDomain(format!("eps = {eps} and delta = {delta} must be positive")));
    }
    let base = argmin_set(f, body, opts.tol)?;
    let face = body.sub_body(&base.active_vertices)?;
    let g = exposing_functional(&face, eps / 2.0, seed, opts)?;
    let face_value = face.vertices().iter().map(|x| g.apply(x)).fold(f64::INFINITY, f64::min);
    let g_norm = g.norm();
    let mut steps = Vec::new();
    let mut last_diameter = base.diameter;
    for k in 0..=opts.max_halvings {
        let t = delta / (g_norm * 2f64.powi(k as i32));
        let candidate = f.add_scaled(&g, t);
        let set = argmin_set(&candidate, body, opts.tol)?;
        let bound = base.value + t * face_value;
        let max_g_on_active = set
            .active_vertices
            .iter()
            .map(|&i| g.apply(&body.vertices()[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let slack = opts.assertion_tol * (1.0 + bound.abs());
        steps.push(LineSearchStep {
            t,
            value: set.value,
            bound,
            diameter: set.diameter,
            max_g_on_active,
            bound_holds: set.value <= bound + slack,
            face_bound_holds: max_g_on_active <= face_value + opts.assertion_tol,
        });
        last_diameter = set.diameter;
        if set.diameter <= eps {
            return Ok(Perturbation {
                functional: candidate,
                t,
                direction: g,
                base_value: base.value,
                face_value,
                initial_diameter: base.diameter,
                diameter: set.diameter,
                steps,
            });
        }
    }
    Err(Error::PerturbationFailure { halvings: opts.max_halvings, diameter: last_diameter })
}

/// One scale of a [`semicontinuity_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeStep {
    pub scale: f64,
    pub value: f64,
    /// `|m(f_n) - m(f)|`.
    pub value_gap: f64,
    pub diameter: f64,
    /// `diam M(f_n) > diam M(f) + tol`.
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemicontinuityReport {
    pub base: ArgminSet,
    pub steps: Vec<ProbeStep>,
}

impl SemicontinuityReport {
    /// Diameter violations among steps `from..`.
    pub fn violations_from(&self, from: usize) -> usize {
        self.steps.iter().skip(from).filter(|s| s.violation).count()
    }

    /// Largest value gap among steps `from..`.
    pub fn max_gap_from(&self, from: usize) -> f64 {
        self.steps.iter().skip(from).map(|s| s.value_gap).fold(0.0, f64::max)
    }

    /// Whether the value gaps are non-increasing from step `from` on, up to
    /// `slack`.
    pub fn gaps_monotone_from(&self, from: usize, slack: f64) -> bool {
        self.steps[from.min(self.steps.len())..].windows(2).all(|w| w[1].value_gap <= w[0].value_gap + slack)
    }
}

/// Evaluates `m` and `diam M` along `f_n = f + scale_n p_n`.
pub fn semicontinuity_probe(
    f: &Functional,
    body: &ConvexBody,
    perturbations: &[Functional],
    scales: &[f64],
    diameter_tol: f64,
    opts: &ManeOptions,
) -> Result<SemicontinuityReport> {
    if perturbations.len() != scales.len() {
        return Err(Error::InputDomain("one perturbation per scale required".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InputDomain("scales must be positive and strictly decreasing".into()));
    }
    let base = argmin_set(f, body, opts.tol)?;
    let mut steps = Vec::with_capacity(scales.len());
    for (p, &scale) in perturbations.iter().zip(scales) {
        check_dims(p, body)?;
        let set = argmin_set(&f.add_scaled(p, scale), body, opts.tol)?;
        steps.push(ProbeStep {
            scale,
            value: set.value,
            value_gap: (set.value - base.value).abs(),
            diameter: set.diameter,
            violation: set.diameter > base.diameter + diameter_tol,
        });
    }
    Ok(SemicontinuityReport { base, steps })
}

/// Fraction of uniformly drawn unit functionals whose argmin set on `body` has
/// diameter at most `eps`.
pub fn genericity_sweep(body: &ConvexBody, sample_count: usize, eps: f64, seed: u64, opts: &ManeOptions) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::InputDomain("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..sample_count {
        let f = Functional { coefficients: unit_direction(body.dim(), &mut rng) };
        if argmin_set(&f, body, opts.tol)?.diameter <= eps {
            hits += 1;
        }
    }
    Ok(hits as f64 / sample_count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexBody {
        ConvexBody::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    fn func(c: &[f64]) -> Functional {
        Functional::new(c.to_vec()).unwrap()
    }

    #[test]
    fn argmin_examples() {
        let k = unit_square();
        let zero = argmin_set(&Functional::zero(2), &k, 1e-12).unwrap();
        assert_eq!(zero.value, 0.0);
        assert_eq!(zero.active_vertices, vec![0, 1, 2, 3]);
        assert!((zero.diameter - 2f64.sqrt()).abs() < 1e-15);

        let corner = argmin_set(&func(&[1.0, 1.0]), &k, 1e-12).unwrap();
        assert_eq!((corner.value, corner.active_vertices.clone(), corner.diameter), (0.0, vec![0], 0.0));

        let edge = argmin_set(&func(&[1.0, 0.0]), &k, 1e-12).unwrap();
        assert_eq!((edge.value, edge.active_vertices.clone(), edge.diameter), (0.0, vec![0, 2], 1.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(argmin_set(&Functional::zero(3), &unit_square(), 1e-12).is_err());
        assert!(ConvexBody::from_rows(&[vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(ConvexBody::new(vec![]).is_err());
    }

    #[test]
    fn probe_on_strict_and_edge_minimum() {
        let k = unit_square();
        let opts = ManeOptions::default();
        let scales: Vec<f64> = (1..=20).map(|j| 0.5f64.powi(j)).collect();
        let perturb = vec![func(&[0.3, -0.7]); 20];
        let strict = semicontinuity_probe(&func(&[1.0, 1.0]), &k, &perturb, &scales, 1e-9, &opts).unwrap();
        assert_eq!(strict.violations_from(0), 0);
        assert!(strict.steps.last().unwrap().value_gap < 1e-5);
        assert!(strict.steps.iter().skip(1).all(|s| s.diameter == 0.0));

        let up = vec![func(&[0.0, 1.0]); 20];
        let edge = semicontinuity_probe(&func(&[1.0, 0.0]), &k, &up, &scales, 1e-9, &opts).unwrap();
        assert_eq!(edge.base.diameter, 1.0);
        assert!(edge.steps.iter().all(|s| s.diameter == 0.0 && !s.violation));
    }

    #[test]
    fn probe_rejects_bad_scales() {
        let k = unit_square();
        let p = vec![func(&[1.0, 0.0]); 2];
        let opts = ManeOptions::default();
        assert!(semicontinuity_probe(&Functional::zero(2), &k, &p, &[0.5, 0.5], 0.0, &opts).is_err());
        assert!(semicontinuity_probe(&Functional::zero(2), &k, &p, &[0.5], 0.0, &opts).is_err());
    }

    #[test]
    fn exposing_functional_examples() {
        let opts = ManeOptions::default();
        let g = exposing_functional(&unit_square(), 0.1, 3, &opts).unwrap();
        assert_eq!(argmin_set(&g, &unit_square(), opts.tol).unwrap().diameter, 0.0);
        let point = ConvexBody::from_rows(&[vec![0.2, 0.4, 0.1]]).unwrap();
        let g = exposing_functional(&point, 1e-9, 0, &opts).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        assert!(exposing_functional(&point, 0.0, 0, &opts).is_err());
    }

    #[test]
    fn exposing_budget_exhaustion_is_reported() {
        let seg = ConvexBody::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let opts = ManeOptions { redraw_budget: 0, ..ManeOptions::default() };
        assert!(matches!(exposing_functional(&seg, 0.5, 0, &opts), Err(Error::ConstructionFailure(0))));
    }

    #[test]
    fn shrink_from_zero_functional() {
        let k = unit_square();
        let opts = ManeOptions::default();
        let out = shrink_argmin(&Functional::zero(2), &k, 1e-3, 1.0, 11, &opts).unwrap();
        assert_eq!(out.diameter, 0.0);
        assert!(out.assertions_hold());
        assert!((out.functional.norm() - out.t * out.direction.norm()).abs() < 1e-15);
        let set = argmin_set(&out.functional, &k, opts.tol).unwrap();
        // equality case of the value bound: f = 0 so m(f*) = t m_0(g)
        assert!((set.value - out.t * out.face_value).abs() < 1e-15);
    }

    #[test]
    fn shrink_already_unique() {
        let k = unit_square();
        let out = shrink_argmin(&func(&[1.0, 1.0]), &k, 1e-3, 0.5, 2, &ManeOptions::default()).unwrap();
        assert_eq!(out.steps.len(), 1);
        assert_eq!(out.diameter, 0.0);
        assert!(out.t <= 0.5 / out.direction.norm());
    }

    #[test]
    fn shrink_on_segment() {
        let seg = ConvexBody::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let f = func(&[0.0, 1.0]);
        assert_eq!(argmin_set(&f, &seg, 1e-12).unwrap().diameter, 1.0);
        let out = shrink_argmin(&f, &seg, 1e-6, 0.1, 5, &ManeOptions::default()).unwrap();
        assert_eq!(out.diameter, 0.0);
        assert!((out.functional.add_scaled(&f, -1.0)).norm() <= 0.1 + 1e-15);
    }

    #[test]
    fn shrink_reports_exhausted_schedule() {
        // every step is below the argmin tolerance, so the whole edge stays active
        let k = ConvexBody::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, -1e-13]]).unwrap();
        let opts = ManeOptions { max_halvings: 5, ..ManeOptions::default() };
        let err = shrink_argmin(&func(&[0.0, 1.0]), &k, 1e-3, 1e-14, 0, &opts).unwrap_err();
        assert!(matches!(err, Error::PerturbationFailure { halvings: 5, .. }));
        assert!(shrink_argmin(&Functional::zero(2), &unit_square(), 0.0, 1.0, 0, &opts).is_err());
    }

    #[test]
    fn sweep_examples() {
        let opts = ManeOptions::default();
        let frac = genericity_sweep(&unit_square(), 10_000, 1e-6, 9, &opts).unwrap();
        assert!(frac >= 0.999);
        let point = ConvexBody::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(genericity_sweep(&point, 100, 1e-9, 1, &opts).unwrap(), 1.0);
        assert_eq!(genericity_sweep(&unit_square(), 100, 2.0, 1, &opts).unwrap(), 1.0);
    }

    #[test]
    fn csv_loading() {
        let k = ConvexBody::from_csv("# square\n0,0\n1,0\n0,1\n1,1\n").unwrap();
        assert_eq!(k, unit_square());
        let fs = Functional::from_csv("1, 2\n0.5,-1 # second\n").unwrap();
        assert_eq!(fs, vec![func(&[1.0, 2.0]), func(&[0.5, -1.0])]);
        assert!(ConvexBody::from_csv("1,x\n").is_err());
    }
}
