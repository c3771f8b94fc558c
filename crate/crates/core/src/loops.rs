//! Discrete free loops on the torus, their length and action, and the loop
//! measure they induce on the tangent bundle.
//!
//! A loop with `N` vertices is stored as a lift `x_0, ..., x_{N-1}` to the
//! plane together with its winding `w = (p, q)`; the closing vertex is
//! `x_N = x_0 + w`. Vertex `i` sits at parameter `t_i = i / N`. Segment `i`
//! runs from `x_i` to `x_{i+1}` and is evaluated with coefficients frozen at
//! its midpoint.

use std::fmt::Write as _;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::metric::{FinslerMetric, Point};

pub const MIN_VERTICES: usize = 8;

/// Integer winding `(p, q)` of a lifted loop, i.e. its free homotopy class.
pub type Winding = (i64, i64);

pub fn winding_vector(w: Winding) -> Vector2<f64> {
    Vector2::new(w.0 as f64, w.1 as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLoop {
    vertices: Vec<Point>,
    winding: Winding,
}

impl DiscreteLoop {
    pub fn new(vertices: Vec<Point>, winding: Winding) -> Result<Self> {
        if vertices.len() < MIN_VERTICES {
            return Err(Error::MalformedLoop(format!(
                "{} vertices, at least {MIN_VERTICES} required",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::MalformedLoop("non-finite vertex".into()));
        }
        Ok(Self { vertices, winding })
    }

    /// Builds a loop from `N + 1` lifted points whose last point closes the
    /// loop up to an integer translation.
    pub fn from_closed_lift(mut points: Vec<Point>) -> Result<Self> {
        let last = points.pop().ok_or_else(|| Error::MalformedLoop("empty lift".into()))?;
        let first = *points.first().ok_or_else(|| Error::MalformedLoop("empty lift".into()))?;
        let d = last - first;
        let (p, q) = (d.x.round(), d.y.round());
        if (d.x - p).abs() > 1e-9 || (d.y - q).abs() > 1e-9 {
            return Err(Error::MalformedLoop(format!(
                "endpoint offset ({}, {}) is not an integer vector",
                d.x, d.y
            )));
        }
        Self::new(points, (p as i64, q as i64))
    }

    /// Straight loop `start + t w`, sampled uniformly.
    pub fn straight(start: Point, winding: Winding, n: usize) -> Result<Self> {
        let w = winding_vector(winding);
        Self::new((0..n).map(|i| start + w * (i as f64 / n as f64)).collect(), winding)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn winding(&self) -> Winding {
        self.winding
    }

    /// Lifted vertex `i`; indices past `N - 1` continue on the next lap.
    pub fn vertex(&self, i: usize) -> Point {
        let n = self.vertices.len();
        let laps = (i / n) as f64;
        self.vertices[i % n] + winding_vector(self.winding) * laps
    }

    /// Midpoint and displacement of segment `i`.
    pub fn segment(&self, i: usize) -> (Point, Vector2<f64>) {
        let a = self.vertex(i);
        let b = self.vertex(i + 1);
        (0.5 * (a + b), b - a)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Vector2<f64>)> + '_ {
        (0..self.vertices.len()).map(move |i| self.segment(i))
    }

    /// The winding, rejecting the trivial class.
    pub fn require_nontrivial(&self) -> Result<Winding> {
        match self.winding {
            (0, 0) => Err(Error::TrivialClass(0, 0)),
            w => Ok(w),
        }
    }

    /// Same loop started at vertex `k` (parameter shift `t -> t + k / N`).
    pub fn shifted(&self, k: usize) -> Self {
        let n = self.vertices.len();
        let vertices = (0..n).map(|i| self.vertex(i + k % n)).collect();
        Self { vertices, winding: self.winding }
    }

    /// The loop traversed backwards; its class is `-w`.
    pub fn reversed(&self) -> Self {
        let n = self.vertices.len();
        let w = winding_vector(self.winding);
        let vertices = (0..n).map(|i| self.vertex(n - i) - w).collect();
        Self { vertices, winding: (-self.winding.0, -self.winding.1) }
    }

    pub fn translated(&self, offset: Vector2<f64>) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v + offset).collect(), winding: self.winding }
    }

    /// Mean vertex position.
    pub fn centroid(&self) -> Point {
        self.vertices.iter().sum::<Point>() / self.vertices.len() as f64
    }

    /// Largest Euclidean segment speed `|N (x_{i+1} - x_i)|`.
    pub fn max_euclidean_speed(&self) -> f64 {
        let n = self.vertices.len() as f64;
        self.segments().map(|(_, d)| (d * n).norm()).fold(0.0, f64::max)
    }

    /// CSV dump: a `# N=.. p=.. q=..` header, an `x,y` header, one vertex per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# N={} p={} q={}\nx,y\n", self.vertices.len(), self.winding.0, self.winding.1);
        for v in &self.vertices {
            let _ = writeln!(out, "{},{}", v.x, v.y);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty loop file".into()))?;
        let mut fields = (None, None, None);
        for token in header.trim_start_matches('#').split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token {token}")))?;
            let parse = |s: &str| s.parse::<i64>().map_err(|e| Error::Parse(format!("{key}: {e}")));
            match key {
                "N" => fields.0 = Some(parse(value)?),
                "p" => fields.1 = Some(parse(value)?),
                "q" => fields.2 = Some(parse(value)?),
                _ => return Err(Error::Parse(format!("unknown header key {key}"))),
            }
        }
        let (Some(n), Some(p), Some(q)) = fields else {
            return Err(Error::Parse("header must define N, p and q".into()));
        };
        let mut vertices = Vec::with_capacity(n.max(0) as usize);
        for line in lines {
            if line == "x,y" {
                continue;
            }
            let (x, y) = line.split_once(',').ok_or_else(|| Error::Parse(format!("bad row {line}")))?;
            let x = x.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
            let y = y.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?;
            vertices.push(Point::new(x, y));
        }
        if vertices.len() as i64 != n {
            return Err(Error::Parse(format!("header says {n} vertices, found {}", vertices.len())));
        }
        Self::new(vertices, (p, q))
    }
}

pub fn winding_class(curve: &DiscreteLoop) -> Winding {
    curve.winding()
}

/// `l_F`: sum of `F(m_i, dx_i)` over segments.
pub fn length(metric: &FinslerMetric, curve: &DiscreteLoop) -> f64 {
    curve.segments().map(|(m, d)| metric.speed(&m, &d)).sum()
}

/// `A_F`: Riemann sum `(1/N) sum F^2(m_i, N dx_i)`.
pub fn action(metric: &FinslerMetric, curve: &DiscreteLoop) -> f64 {
    let n = curve.vertex_count() as f64;
    curve.segments().map(|(m, d)| metric.speed(&m, &(d * n)).powi(2)).sum::<f64>() / n
}

/// `A_F - l_F^2`, the Cauchy-Schwarz defect: the variance of segment F-speeds.
pub fn cs_gap(metric: &FinslerMetric, curve: &DiscreteLoop) -> f64 {
    action(metric, curve) - length(metric, curve).powi(2)
}

/// Relative threshold on [`cs_gap`] below which a loop counts as constant speed.
pub const CONSTANT_SPEED_TOL: f64 = 1e-6;

pub fn is_constant_speed(metric: &FinslerMetric, curve: &DiscreteLoop) -> bool {
    cs_gap(metric, curve) <= CONSTANT_SPEED_TOL * action(metric, curve)
}

/// Arc-length parametrization of the polygon by frozen-midpoint F-length.
struct ArcParam<'a> {
    curve: &'a DiscreteLoop,
    cumulative: Vec<f64>,
    seg: Vec<f64>,
}

impl<'a> ArcParam<'a> {
    fn new(metric: &FinslerMetric, curve: &'a DiscreteLoop) -> Self {
        let seg: Vec<f64> = curve.segments().map(|(m, d)| metric.speed(&m, &d)).collect();
        let mut cumulative = Vec::with_capacity(seg.len() + 1);
        cumulative.push(0.0);
        for s in &seg {
            cumulative.push(cumulative.last().unwrap() + s);
        }
        Self { curve, cumulative, seg }
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn position(&self, s: f64) -> Point {
        let n = self.seg.len();
        let i = match self.cumulative.partition_point(|&c| c <= s) {
            0 => 0,
            k => (k - 1).min(n - 1),
        };
        let (a, b) = (self.curve.vertex(i), self.curve.vertex(i + 1));
        let frac = if self.seg[i] > 0.0 { ((s - self.cumulative[i]) / self.seg[i]).clamp(0.0, 1.0) } else { 0.0 };
        a + (b - a) * frac
    }
}

const ROOT_TOL: f64 = 1e-14;

/// A root bracket `f(lo) <= 0 <= f(hi)`; an infinite end value means `f` is
/// only known to have the right sign there.
struct Bracket {
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
}

/// Root of a nondecreasing `f` by regula falsi with the Illinois
/// modification. While an end value is infinite, steps are Newton steps with
/// the estimated `slope` from the last finite value, or bisection. Returns
/// the iterate with the smallest `|f|`.
fn illinois(mut f: impl FnMut(f64) -> f64, bracket: Bracket, guess: Option<f64>, slope: f64, tol: f64) -> f64 {
    let Bracket { mut lo, mut hi, mut f_lo, mut f_hi } = bracket;
    let (mut best, mut best_abs) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo.abs()) } else { (hi, f_hi.abs()) };
    let mut last: Option<(f64, f64)> = None;
    let mut side = 0;
    for i in 0..200 {
        let mut x = match (guess, last) {
            (Some(g), _) if i == 0 => g,
            _ if f_lo.is_finite() && f_hi.is_finite() && f_hi > f_lo => hi - f_hi * (hi - lo) / (f_hi - f_lo),
            (_, Some((x, fx))) if fx.is_finite() && slope.is_finite() => x - fx / slope,
            _ => 0.5 * (lo + hi),
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
            if !(x > lo && x < hi) {
                break;
            }
        }
        let fx = f(x);
        last = Some((x, fx));
        if fx.abs() < best_abs {
            (best, best_abs) = (x, fx.abs());
        }
        if fx.abs() <= tol {
            break;
        }
        if fx < 0.0 {
            (lo, f_lo) = (x, fx);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, f_hi) = (x, fx);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    best
}

/// Moves the vertices along the original polygon so that consecutive chords
/// have equal F-length. Vertex 0 stays fixed.
///
/// For a trial chord length `l`, each vertex is placed at the first point of
/// the polygon whose chord from the previous vertex has F-length `l`; `l` is
/// then solved for so that the closing chord back to `x_0 + w` matches.
///
/// New vertices lie on the input polygon, so the image and the class are kept.
/// Chords that cut across a corner are shorter than the arc they replace; the
/// length is preserved exactly only along straight runs.
pub fn reparametrize_constant_speed(metric: &FinslerMetric, curve: &DiscreteLoop) -> Result<DiscreteLoop> {
    let param = ArcParam::new(metric, curve);
    let total = param.total();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateLoop(format!("F-length {total}")));
    }
    let n = curve.vertex_count();
    let end = curve.vertex(n);
    let chord = |a: &Point, b: &Point| metric.speed(&(0.5 * (a + b)), &(b - a));

    // Places n - 1 vertices with chords `l`; `None` if the polygon runs out.
    let walk = |l: f64| -> Option<Vec<Point>> {
        let mut points = Vec::with_capacity(n);
        points.push(curve.vertex(0));
        let mut s = 0.0;
        for _ in 1..n {
            let from = *points.last().unwrap();
            // first knot past `s` whose chord reaches `l`; the chord at `s` is 0
            let mut k = param.cumulative.partition_point(|&c| c <= s);
            let (mut lo, mut f_lo) = (s, -l);
            let f_hi = loop {
                if k > n {
                    return None;
                }
                let gap = chord(&from, &curve.vertex(k)) - l;
                if gap >= 0.0 {
                    break gap;
                }
                (lo, f_lo) = (param.cumulative[k], gap);
                k += 1;
            };
            let bracket = Bracket { lo, hi: param.cumulative[k], f_lo, f_hi };
            s = illinois(|t| chord(&from, &param.position(t)) - l, bracket, None, f64::NAN, ROOT_TOL * l);
            points.push(param.position(s));
        }
        Some(points)
    };

    // minus the closing mismatch, increasing in `l`; +inf when the walk fails
    let mut best: Option<(f64, Vec<Point>)> = None;
    let mismatch = |l: f64| match walk(l) {
        Some(points) => {
            let gap = l - chord(points.last().unwrap(), &end);
            if best.as_ref().is_none_or(|(g, _)| gap.abs() < *g) {
                best = Some((gap.abs(), points));
            }
            gap
        }
        None => f64::INFINITY,
    };
    // each chord adds about 1 to the mismatch per unit of `l`
    let bracket = Bracket { lo: 0.0, hi: total, f_lo: f64::NEG_INFINITY, f_hi: f64::INFINITY };
    illinois(mismatch, bracket, Some(total / n as f64), n as f64, ROOT_TOL * total);
    let points = match best {
        Some((_, points)) => points,
        None => return Err(Error::DegenerateLoop("no chord length closes the loop".into())),
    };
    DiscreteLoop::new(points, curve.winding())
}

/// One atom of a [`LoopMeasure`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSample {
    pub point: Point,
    pub velocity: Vector2<f64>,
    pub weight: f64,
}

/// Probability measure on the tangent bundle supported on velocities `|v| <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopMeasure {
    samples: Vec<MeasureSample>,
    speed_cap: f64,
}

impl LoopMeasure {
    pub fn samples(&self) -> &[MeasureSample] {
        &self.samples
    }

    pub fn speed_cap(&self) -> f64 {
        self.speed_cap
    }

    pub fn integrate(&self, mut f: impl FnMut(&Point, &Vector2<f64>) -> f64) -> f64 {
        self.samples.iter().map(|s| s.weight * f(&s.point, &s.velocity)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    /// Samplewise convex combination `sum a_k mu_k`. Weights must be
    /// nonnegative and sum to one.
    pub fn convex_combination(parts: &[(f64, &LoopMeasure)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(a, _)| a).sum();
        if parts.is_empty() || parts.iter().any(|(a, _)| *a < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InputDomain("convex weights must be nonnegative and sum to 1".into()));
        }
        let samples = parts
            .iter()
            .flat_map(|(a, mu)| mu.samples.iter().map(move |s| MeasureSample { weight: a * s.weight, ..*s }))
            .collect();
        let speed_cap = parts.iter().map(|(_, mu)| mu.speed_cap).fold(0.0, f64::max);
        Ok(Self { samples, speed_cap })
    }
}

/// `mu_c`: uniform atoms at `(m_i, N dx_i)`; requires every segment speed to
/// respect the cap `b`.
pub fn loop_measure(curve: &DiscreteLoop, speed_cap: f64) -> Result<LoopMeasure> {
    let n = curve.vertex_count();
    let weight = 1.0 / n as f64;
    let mut samples = Vec::with_capacity(n);
    for (i, (m, d)) in curve.segments().enumerate() {
        let velocity = d * n as f64;
        let speed = velocity.norm();
        if speed > speed_cap {
            return Err(Error::SpeedCapExceeded { segment: i, speed, cap: speed_cap });
        }
        samples.push(MeasureSample { point: m, velocity, weight });
    }
    Ok(LoopMeasure { samples, speed_cap })
}
