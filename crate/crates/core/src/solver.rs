//! Shortest closed geodesics in a free homotopy class.
//!
//! The objective is the discrete action `A_F`, minimized over vertex positions
//! of a lifted loop whose winding stays fixed. Minimizers of the action have
//! constant F-speed and minimize length in their class, so the action's argmin
//! is the set of shortest closed geodesics. Descent directions are
//! Sobolev (H^1) gradients: the Euclidean gradient preconditioned by the
//! flat-metric Hessian `2N L + sigma I`, `L` the cyclic second difference.

use std::cmp::Ordering;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::loops::{action, length, reparametrize_constant_speed, DiscreteLoop, Winding};
use crate::metric::{comparison_constant, FinslerMetric, Point, ReferenceMetric};

/// Base-point resolution used when computing `c_F` for speed bounds.
pub const COMPARISON_GRID: usize = 32;

/// Relative slack in [`verify_speed_cap`].
pub const SPEED_CAP_SLACK: f64 = 1e-6;

/// Near-optimal runs are those within this fraction of the best length.
pub const LENGTH_TOL: f64 = 1e-3;

/// Armijo backtracking parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRule {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { initial_step: 1.0, shrink: 0.5, sufficient_decrease: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Vertex count `N` of loops built by the solver.
    pub vertices: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Stop once the max-norm of the action gradient is below this.
    pub grad_tol: f64,
    pub num_starts: usize,
    pub cluster_tol: f64,
    /// Amplitude of the uniform per-vertex jitter applied to starting loops.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            vertices: 128,
            max_iters: 20_000,
            step_rule: StepRule::default(),
            grad_tol: 1e-6,
            num_starts: 16,
            cluster_tol: 0.05,
            jitter: 0.05,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let rule = &self.step_rule;
        let problems = [
            (self.vertices < 32, "vertex count must be at least 32"),
            (!(self.grad_tol > 0.0), "grad_tol must be positive"),
            (!(self.cluster_tol > 0.0), "cluster_tol must be positive"),
            (self.num_starts < 1, "num_starts must be at least 1"),
            (!(self.jitter >= 0.0), "jitter must be nonnegative"),
            (!(rule.initial_step > 0.0), "initial step must be positive"),
            (!(rule.shrink > 0.0 && rule.shrink < 1.0), "shrink factor must lie in (0, 1)"),
            (!(rule.sufficient_decrease > 0.0 && rule.sufficient_decrease < 1.0), "sufficient decrease must lie in (0, 1)"),
        ];
        match problems.iter().find(|(bad, _)| *bad) {
            Some((_, msg)) => Err(Error::InputDomain((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Euclidean length of the straight representative, the minimum of the
/// reference length over the class.
pub fn min_reference_length(class: Winding) -> Result<f64> {
    match class {
        (0, 0) => Err(Error::TrivialClass(0, 0)),
        (p, q) => Ok((p as f64).hypot(q as f64)),
    }
}

/// A-priori speed bound `C_0 = c_F^2 * min l_g` for shortest loops in `class`.
pub fn speed_bound(metric: &FinslerMetric, class: Winding, reference: &ReferenceMetric) -> Result<f64> {
    let min_len = min_reference_length(class)?;
    let c = comparison_constant(metric, reference, COMPARISON_GRID)?;
    Ok(c * c * min_len)
}

/// Checks `max_i |N dx_i| <= C_0 (1 + 1e-6)`.
pub fn verify_speed_cap(metric: &FinslerMetric, curve: &DiscreteLoop, class: Winding, reference: &ReferenceMetric) -> Result<bool> {
    let bound = speed_bound(metric, class, reference)?;
    Ok(curve.max_euclidean_speed() <= bound * (1.0 + SPEED_CAP_SLACK))
}

/// Discrete action and its gradient with respect to each vertex.
pub fn action_gradient(metric: &FinslerMetric, curve: &DiscreteLoop) -> (f64, Vec<Vector2<f64>>) {
    let n = curve.vertex_count();
    let nf = n as f64;
    let mut grad = vec![Vector2::zeros(); n];
    let mut total = 0.0;
    for i in 0..n {
        let (m, d) = curve.segment(i);
        let jet = metric.speed_jet(&m, &(d * nf));
        total += jet.value * jet.value;
        // d/dx of F^2(m, N d) / N, split between the two endpoints
        let half_x = jet.dx * jet.value / nf;
        let along = jet.dv * (2.0 * jet.value);
        grad[i] += half_x - along;
        grad[(i + 1) % n] += half_x + along;
    }
    (total / nf, grad)
}

fn max_norm(grad: &[Vector2<f64>]) -> f64 {
    grad.iter().map(|g| g.x.abs().max(g.y.abs())).fold(0.0, f64::max)
}

/// Solves `(2N L + sigma I) x = rhs` for the cyclic second difference `L`.
fn sobolev_solve(rhs: &[f64], n: usize, sigma: f64) -> Vec<f64> {
    let nf = n as f64;
    let off = -2.0 * nf;
    let diag = 4.0 * nf + sigma;
    // Sherman-Morrison reduction of the cyclic system to two tridiagonal ones
    let gamma = -diag;
    let mut main = vec![diag; n];
    main[0] = diag - gamma;
    main[n - 1] = diag - off * off / gamma;
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut beta = main[0];
        x[0] = r[0] / beta;
        for i in 1..n {
            c[i] = off / beta;
            beta = main[i] - off * c[i];
            x[i] = (r[i] - off * x[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i + 1] * x[i + 1];
        }
        x
    };
    let x = solve(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = solve(&u);
    let fact = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Iterations between updates of the preconditioner's mass term.
const MASS_REFRESH: usize = 20;

/// Mass term of the preconditioner: the action's curvature under rigid
/// translation of the whole loop, per vertex, and at least `1 / N`. Without
/// it, metrics that vary in space make translations far stiffer than the
/// preconditioner assumes and the line search crawls.
fn translation_mass(metric: &FinslerMetric, curve: &DiscreteLoop) -> f64 {
    let n = curve.vertex_count() as f64;
    let h = 1e-4;
    let mut stiffest = 0.0_f64;
    for axis in [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)] {
        let (_, plus) = action_gradient(metric, &curve.translated(axis * h));
        let (_, minus) = action_gradient(metric, &curve.translated(-axis * h));
        let curvature: f64 = plus.iter().zip(&minus).map(|(p, m)| (p - m).dot(&axis)).sum::<f64>() / (2.0 * h);
        stiffest = stiffest.max(curvature);
    }
    (1.0 + stiffest) / n
}

/// Result of one descent.
#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    /// Final iterate reparametrized to constant F-speed.
    pub curve: DiscreteLoop,
    pub converged: bool,
    pub iterations: usize,
    /// Action-gradient max-norm at the final iterate, before reparametrization.
    pub gradient_norm: f64,
    /// Action of `curve`; never above the action of the starting loop.
    pub action: f64,
    /// Action after every accepted descent step, starting with the initial loop.
    pub action_trace: Vec<f64>,
}

struct Descent {
    curve: DiscreteLoop,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

fn descend(metric: &FinslerMetric, start: DiscreteLoop, config: &SolverConfig, budget: usize, trace: &mut Vec<f64>) -> Result<Descent> {
    let n = start.vertex_count();
    let winding = start.winding();
    let rule = config.step_rule;
    let mut curve = start;
    let (mut value, mut grad) = action_gradient(metric, &curve);
    if trace.is_empty() {
        trace.push(value);
    }
    let mut iterations = 0;
    let mut sigma = 0.0;
    loop {
        let gradient_norm = max_norm(&grad);
        if gradient_norm <= config.grad_tol || !gradient_norm.is_finite() || iterations >= budget {
            let converged = gradient_norm <= config.grad_tol;
            return Ok(Descent { curve, gradient_norm, iterations, converged });
        }
        let gx: Vec<f64> = grad.iter().map(|g| g.x).collect();
        let gy: Vec<f64> = grad.iter().map(|g| g.y).collect();
        if iterations % MASS_REFRESH == 0 {
            sigma = translation_mass(metric, &curve);
        }
        let dx = sobolev_solve(&gx, n, sigma);
        let dy = sobolev_solve(&gy, n, sigma);
        let slope: f64 = -(0..n).map(|i| gx[i] * dx[i] + gy[i] * dy[i]).sum::<f64>();
        let mut step = rule.initial_step;
        let accepted = loop {
            let trial: Vec<Point> = curve
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, v)| v - Vector2::new(dx[i], dy[i]) * step)
                .collect();
            let trial = DiscreteLoop::new(trial, winding)?;
            let trial_value = action(metric, &trial);
            if trial_value <= value + rule.sufficient_decrease * step * slope {
                // a step that leaves the action unchanged means round-off has taken over
                break (trial_value < value).then_some(trial);
            }
            step *= rule.shrink;
            if step < 1e-18 {
                break None;
            }
        };
        let Some(next) = accepted else {
            // no further decrease resolvable in floating point
            return Ok(Descent { curve, gradient_norm, iterations, converged: false });
        };
        curve = next;
        (value, grad) = action_gradient(metric, &curve);
        trace.push(value);
        iterations += 1;
    }
}

/// Starting loop for [`shortest_loop`].
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLoop {
    /// Straight lift from the origin with seeded jitter.
    Straight,
    Given(DiscreteLoop),
}

/// Straight lift through `origin` in `class`, each vertex jittered uniformly in
/// `[-amplitude, amplitude]^2`.
pub fn jittered_straight(origin: Point, class: Winding, n: usize, amplitude: f64, rng: &mut impl Rng) -> Result<DiscreteLoop> {
    let base = DiscreteLoop::straight(origin, class, n)?;
    let vertices = base
        .vertices()
        .iter()
        .map(|v| {
            let jitter = Vector2::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            v + jitter * amplitude
        })
        .collect();
    DiscreteLoop::new(vertices, class)
}

/// Minimizes the action in `class` from `init` by monotone descent, then
/// reparametrizes the result to constant F-speed. The returned action never
/// exceeds that of the starting loop.
pub fn shortest_loop(metric: &FinslerMetric, class: Winding, config: &SolverConfig, init: InitialLoop) -> Result<Geodesic> {
    config.validate()?;
    min_reference_length(class)?;
    let start = match init {
        InitialLoop::Straight => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            jittered_straight(Point::zeros(), class, config.vertices, config.jitter, &mut rng)?
        }
        InitialLoop::Given(curve) => {
            if curve.winding() != class {
                let (p, q) = curve.winding();
                return Err(Error::WindingMismatch(p, q, class.0, class.1));
            }
            curve
        }
    };
    let mut trace = Vec::new();
    let descent = descend(metric, start, config, config.max_iters, &mut trace)?;
    // the discrete minimizer is constant-speed only up to discretization error;
    // sliding its vertices along the polygon fixes that without moving the image
    let resampled = reparametrize_constant_speed(metric, &descent.curve)?;
    let resampled_action = action(metric, &resampled);
    let (curve, output_action) = if resampled_action <= trace[0] {
        (resampled, resampled_action)
    } else {
        (descent.curve, *trace.last().unwrap())
    };
    Ok(Geodesic {
        curve,
        converged: descent.converged,
        iterations: descent.iterations,
        gradient_norm: descent.gradient_norm,
        action: output_action,
        action_trace: trace,
    })
}

/// Distance on the torus from `p` to the lifted segment `[a, b]`.
fn torus_point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let s = b - a;
    let mut d = p - a;
    d.x -= d.x.round();
    d.y -= d.y.round();
    let range = |lo: f64, hi: f64, dc: f64| {
        let from = (lo - dc - 1.0).floor() as i64;
        let to = (hi - dc + 1.0).ceil() as i64;
        from..=to
    };
    let denom = s.norm_squared();
    let mut best = f64::INFINITY;
    for kx in range(s.x.min(0.0), s.x.max(0.0), d.x) {
        for ky in range(s.y.min(0.0), s.y.max(0.0), d.y) {
            let q = d + Vector2::new(kx as f64, ky as f64);
            let t = if denom > 0.0 { (q.dot(&s) / denom).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((q - s * t).norm());
        }
    }
    best
}

fn directed_distance(from: &DiscreteLoop, to: &DiscreteLoop) -> f64 {
    let n = to.vertex_count();
    let segments: Vec<(Point, Point)> = (0..n).map(|i| (to.vertex(i), to.vertex(i + 1))).collect();
    let mut worst = 0.0_f64;
    let mut hint = 0;
    for p in from.vertices() {
        // start near the previous closest segment; stop once p cannot raise the max
        let mut nearest = f64::INFINITY;
        let first = hint;
        for k in 0..n {
            let j = (first + k) % n;
            let d = torus_point_segment(p, &segments[j].0, &segments[j].1);
            if d < nearest {
                nearest = d;
                hint = j;
                if nearest <= worst {
                    break;
                }
            }
        }
        worst = worst.max(nearest);
    }
    worst
}

/// Symmetric Hausdorff distance on the torus between the vertices of each loop
/// and the polygon of the other. Independent of where either loop starts.
pub fn loop_distance(a: &DiscreteLoop, b: &DiscreteLoop) -> Result<f64> {
    if a.winding() != b.winding() {
        let ((p, q), (r, s)) = (a.winding(), b.winding());
        return Err(Error::WindingMismatch(p, q, r, s));
    }
    Ok(directed_distance(a, b).max(directed_distance(b, a)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub representative: DiscreteLoop,
    pub members: usize,
    pub length: f64,
}

/// Summary of one start in [`minimizer_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub start: usize,
    pub offset: f64,
    pub converged: bool,
    pub length: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerReport {
    pub clusters: Vec<Cluster>,
    /// Largest pairwise [`loop_distance`] among near-optimal minima.
    pub spread: f64,
    pub best_length: f64,
    /// Near-optimal minima in canonical order.
    pub minimizers: Vec<DiscreteLoop>,
    pub runs: Vec<RunSummary>,
}

fn canonical_order(a: &(f64, DiscreteLoop), b: &(f64, DiscreteLoop)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| {
        a.1.vertices()
            .iter()
            .zip(b.1.vertices())
            .map(|(u, v)| u.x.total_cmp(&v.x).then(u.y.total_cmp(&v.y)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Direction along which starting loops are translated: transverse to the
/// class, one unit covers every parallel straight loop.
fn transverse_direction(class: Winding) -> Vector2<f64> {
    if class.0 != 0 {
        Vector2::new(0.0, 1.0)
    } else {
        Vector2::new(1.0, 0.0)
    }
}

/// Runs [`shortest_loop`] from `num_starts` stratified translates of the
/// straight loop, keeps converged minima within `1e-3` of the best length and
/// clusters them by single linkage at `cluster_tol`.
pub fn minimizer_set(metric: &FinslerMetric, class: Winding, config: &SolverConfig) -> Result<MinimizerReport> {
    config.validate()?;
    min_reference_length(class)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let direction = transverse_direction(class);
    let k = config.num_starts;
    let starts: Vec<(f64, u64)> = (0..k).map(|i| ((i as f64 + rng.random::<f64>()) / k as f64, rng.random())).collect();

    let mut runs = Vec::with_capacity(k);
    let mut converged = Vec::new();
    for (i, &(offset, seed)) in starts.iter().enumerate() {
        let mut start_rng = ChaCha8Rng::seed_from_u64(seed);
        let init = jittered_straight(Point::zeros() + direction * offset, class, config.vertices, config.jitter, &mut start_rng)?;
        let geodesic = shortest_loop(metric, class, config, InitialLoop::Given(init))?;
        let len = length(metric, &geodesic.curve);
        runs.push(RunSummary {
            start: i,
            offset,
            converged: geodesic.converged,
            length: len,
            iterations: geodesic.iterations,
            gradient_norm: geodesic.gradient_norm,
        });
        if geodesic.converged {
            converged.push((len, geodesic.curve));
        }
    }
    if converged.is_empty() {
        return Err(Error::SolverFailure(format!("none of {k} starts converged")));
    }
    converged.sort_by(canonical_order);
    let best_length = converged[0].0;
    converged.retain(|(len, _)| *len <= best_length * (1.0 + LENGTH_TOL));

    let m = converged.len();
    let mut distances = vec![0.0; m * m];
    let mut spread = 0.0_f64;
    for i in 0..m {
        for j in i + 1..m {
            let d = loop_distance(&converged[i].1, &converged[j].1)?;
            distances[i * m + j] = d;
            distances[j * m + i] = d;
            spread = spread.max(d);
        }
    }
    // single linkage via union-find; roots are the earliest member
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            if distances[i * m + j] <= config.cluster_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; m];
    for (i, (len, curve)) in converged.iter().enumerate() {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(slot) => clusters[slot].members += 1,
            None => {
                root_slot[r] = Some(clusters.len());
                clusters.push(Cluster { representative: curve.clone(), members: 1, length: *len });
            }
        }
    }
    Ok(MinimizerReport {
        clusters,
        spread,
        best_length,
        minimizers: converged.into_iter().map(|(_, c)| c).collect(),
        runs,
    })
}

/// Loop with `2N` vertices obtained by inserting segment midpoints.
pub fn refine(curve: &DiscreteLoop) -> Result<DiscreteLoop> {
    let n = curve.vertex_count();
    let mut vertices = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a = curve.vertex(i);
        vertices.push(a);
        vertices.push(0.5 * (a + curve.vertex(i + 1)));
    }
    DiscreteLoop::new(vertices, curve.winding())
}

/// Mean transverse coordinate of a loop on the circle `R / Z`, using the
/// circular mean so loops near the seam average correctly.
pub fn mean_height(curve: &DiscreteLoop) -> f64 {
    let direction = transverse_direction(curve.winding());
    let (s, c) = curve.vertices().iter().fold((0.0, 0.0), |(s, c), v| {
        let angle = std::f64::consts::TAU * v.dot(&direction);
        (s + angle.sin(), c + angle.cos())
    });
    (s.atan2(c) / std::f64::consts::TAU).rem_euclid(1.0)
}

/// Torus distance between two heights on the circle `R / Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{ConformalFactor, FourierMode};
    use crate::loops::cs_gap;

    fn fast_config() -> SolverConfig {
        SolverConfig { vertices: 64, num_starts: 4, ..SolverConfig::default() }
    }

    #[test]
    fn reference_lengths() {
        assert_eq!(min_reference_length((1, 0)).unwrap(), 1.0);
        assert_eq!(min_reference_length((3, 4)).unwrap(), 5.0);
        assert!((min_reference_length((1, 1)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(min_reference_length((0, 0)), Err(Error::TrivialClass(0, 0))));
    }

    #[test]
    fn speed_bounds() {
        let r = ReferenceMetric;
        let flat = FinslerMetric::euclidean();
        let infl = crate::metric::COMPARISON_INFLATION.powi(2);
        assert!((speed_bound(&flat, (1, 0), &r).unwrap() - infl).abs() < 1e-12);
        assert!((speed_bound(&flat, (3, 4), &r).unwrap() - 5.0 * infl).abs() < 1e-12);
        let randers = FinslerMetric::constant_randers(0.5, 0.0).unwrap();
        assert!((speed_bound(&randers, (1, 0), &r).unwrap() - 4.0 * infl).abs() < 1e-12);
        assert!(speed_bound(&flat, (0, 0), &r).is_err());
    }

    #[test]
    fn sobolev_solve_inverts_operator() {
        let n = 37;
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x = sobolev_solve(&rhs, n, 0.3);
        let nf = n as f64;
        for i in 0..n {
            let back = (4.0 * nf + 0.3) * x[i] - 2.0 * nf * (x[(i + n - 1) % n] + x[(i + 1) % n]);
            assert!((back - rhs[i]).abs() < 1e-9, "row {i}: {back} vs {}", rhs[i]);
        }
    }

    #[test]
    fn flat_geodesic_is_straight() {
        let flat = FinslerMetric::euclidean();
        let config = SolverConfig { vertices: 128, ..fast_config() };
        let g = shortest_loop(&flat, (1, 0), &config, InitialLoop::Straight).unwrap();
        assert!(g.converged);
        assert!((length(&flat, &g.curve) - 1.0).abs() < 5e-3);
        let y0 = g.curve.vertices()[0].y;
        assert!(g.curve.vertices().iter().all(|v| (v.y - y0).abs() < 1e-3));
        assert!(g.action_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(cs_gap(&flat, &g.curve) <= 1e-6 * g.action);
    }

    #[test]
    fn wrong_initial_class_rejected() {
        let init = DiscreteLoop::straight(Point::zeros(), (0, 1), 64).unwrap();
        let err = shortest_loop(&FinslerMetric::euclidean(), (1, 0), &fast_config(), InitialLoop::Given(init));
        assert!(matches!(err, Err(Error::WindingMismatch(..))));
    }

    #[test]
    fn trough_is_found() {
        // 1 + 0.5 cos^2(2 pi y), troughs at y = 1/4 and 3/4
        let lambda = ConformalFactor::new(1.25, [FourierMode::new(0, 2, 0.25, 0.0)]).unwrap();
        let metric = FinslerMetric::euclidean().conformal_scale(&lambda).unwrap();
        let g = shortest_loop(&metric, (1, 0), &SolverConfig { vertices: 128, ..fast_config() }, InitialLoop::Straight).unwrap();
        assert!(g.converged);
        let h = mean_height(&g.curve);
        assert!(circle_distance(h, 0.25) < 0.02 || circle_distance(h, 0.75) < 0.02, "height {h}");
        assert!((length(&metric, &g.curve) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn loop_distance_examples() {
        let a = DiscreteLoop::straight(Point::new(0.0, 0.1), (1, 0), 32).unwrap();
        assert_eq!(loop_distance(&a, &a).unwrap(), 0.0);
        let b = a.translated(Vector2::new(0.0, 0.3));
        assert!((loop_distance(&a, &b).unwrap() - 0.3).abs() < 1e-12);
        let c = a.translated(Vector2::new(0.0, 0.6));
        assert!((loop_distance(&a, &c).unwrap() - 0.4).abs() < 1e-12);
        assert!(loop_distance(&a, &a.shifted(5)).unwrap() < 1e-12);
        let other = DiscreteLoop::straight(Point::zeros(), (0, 1), 32).unwrap();
        assert!(matches!(loop_distance(&a, &other), Err(Error::WindingMismatch(..))));
    }

    #[test]
    fn single_start_has_zero_spread() {
        let config = SolverConfig { num_starts: 1, ..fast_config() };
        let report = minimizer_set(&FinslerMetric::euclidean(), (1, 0), &config).unwrap();
        assert_eq!(report.spread, 0.0);
        assert_eq!(report.clusters.len(), 1);
    }

    #[test]
    fn speed_cap_examples() {
        let r = ReferenceMetric;
        let flat = FinslerMetric::euclidean();
        let straight = DiscreteLoop::straight(Point::zeros(), (1, 0), 64).unwrap();
        assert!(verify_speed_cap(&flat, &straight, (1, 0), &r).unwrap());
        let randers = FinslerMetric::constant_randers(0.5, 0.0).unwrap();
        assert!(verify_speed_cap(&randers, &straight, (1, 0), &r).unwrap());

        // one segment covering 10/64 of the circle at Euclidean speed 10
        let mut vertices: Vec<Point> = Vec::new();
        for i in 0..64 {
            let x = if i == 0 { 0.0 } else { 10.0 / 64.0 + (i - 1) as f64 * (54.0 / 64.0) / 63.0 };
            vertices.push(Point::new(x, 0.0));
        }
        let fast = DiscreteLoop::new(vertices, (1, 0)).unwrap();
        assert!((fast.max_euclidean_speed() - 10.0).abs() < 1e-9);
        assert!(!verify_speed_cap(&flat, &fast, (1, 0), &r).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { vertices: 16, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { grad_tol: 0.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { num_starts: 0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { cluster_tol: -1.0, ..SolverConfig::default() }.validate().is_err());
    }

    #[test]
    fn circular_mean_height() {
        let a = DiscreteLoop::straight(Point::new(0.0, 0.98), (1, 0), 32).unwrap();
        let jagged: Vec<Point> = a.vertices().iter().enumerate().map(|(i, v)| v + Vector2::new(0.0, if i % 2 == 0 { 0.04 } else { 0.0 })).collect();
        let jagged = DiscreteLoop::new(jagged, (1, 0)).unwrap();
        assert!(circle_distance(mean_height(&jagged), 0.0) < 1e-3);
    }
}
