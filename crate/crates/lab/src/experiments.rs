//! The six experiments. Each returns its config echo, run records and a
//! summary; the report depends only on the config and seed.

use finsler_core::bridge::{action_consistency, consistency_bound, pushforward};
use finsler_core::loops::{action, cs_gap, length, loop_measure, reparametrize_constant_speed};
use finsler_core::mane::{argmin_set, semicontinuity_probe, shrink_argmin, ConvexBody, Functional, ManeOptions};
use finsler_core::metric::{FinslerMetric, Point, ReferenceMetric};
use finsler_core::solver::{circle_distance, mean_height, minimizer_set, speed_bound, verify_speed_cap, MinimizerReport, SolverConfig};
use finsler_core::{ConformalFactor, DiscreteLoop, Winding};
use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::generate::{random_class, random_factor, random_functional, random_loop, random_metric, random_metric_of, random_polytope, MetricKind};
use crate::report::{vertices_of, Record, Report, Run, Verdict};

/// Spread at `t = 0` that witnesses a continuum of minimizers.
pub const FLAT_SPREAD: f64 = 0.3;
/// Spread below which the minimizers count as one loop.
pub const UNIQUE_SPREAD: f64 = 1e-2;
pub const HEIGHT_TOL: f64 = 0.02;
pub const LENGTH_REL_TOL: f64 = 5e-3;
/// Translates in the brute-force height oracle.
pub const ORACLE_TRANSLATES: usize = 1000;
pub const CS_NEGATIVE_TOL: f64 = 1e-9;
pub const CS_AFTER_REL_TOL: f64 = 1e-6;
pub const EXACT_REL_TOL: f64 = 1e-12;
pub const DIAMETER_TOL: f64 = 1e-9;
pub const GAP_MONOTONE_SLACK: f64 = 1e-12;

/// Runs the configured experiment.
pub fn run(config: &ExperimentConfig) -> Report {
    let mut records = vec![config_echo(config)];
    let verdicts = match config.experiment {
        ExperimentId::Uniqueness => uniqueness(config, &mut records),
        ExperimentId::CsProperty => cs_property(config, &mut records),
        ExperimentId::SpeedCap => speed_cap(config, &mut records),
        ExperimentId::ManePolytope => mane_polytope(config, &mut records),
        ExperimentId::Consistency => consistency(config, &mut records),
        ExperimentId::Semicontinuity => semicontinuity(config, &mut records),
    };
    let failures = records.iter().filter(|r| matches!(r, Record::Failure { .. })).count();
    let mut verdicts = verdicts;
    verdicts.push(Verdict::new("no-failures", failures == 0, format!("{failures} failed runs")));
    let pass = verdicts.iter().all(|v| v.pass);
    records.push(Record::Summary { experiment: config.experiment.to_string(), verdicts, pass });
    Report { records }
}

/// Everything but the output path, which does not affect results.
fn config_echo(config: &ExperimentConfig) -> Record {
    let mut entries = config.entries.clone();
    entries.remove("out");
    entries.insert("seed".into(), config.seed.to_string());
    Record::Config { experiment: config.experiment.to_string(), seed: config.seed, entries }
}

fn failure(config: &ExperimentConfig, index: usize, err: impl std::fmt::Display) -> Record {
    Record::Failure { experiment: config.experiment.to_string(), index, message: err.to_string() }
}

fn solver_config(config: &ExperimentConfig) -> SolverConfig {
    SolverConfig { seed: config.seed, ..config.solver }
}

fn transverse(class: Winding) -> Vector2<f64> {
    if class.0 != 0 {
        Vector2::new(0.0, 1.0)
    } else {
        Vector2::new(1.0, 0.0)
    }
}

/// Shortest straight loop among `count` evenly spaced transverse translates:
/// `(offset, length)`.
pub fn straight_oracle(metric: &FinslerMetric, class: Winding, vertices: usize, count: usize) -> finsler_core::Result<(f64, f64)> {
    let mut best = (0.0, f64::INFINITY);
    for i in 0..count {
        let s = i as f64 / count as f64;
        let curve = DiscreteLoop::straight(Point::zeros() + transverse(class) * s, class, vertices)?;
        let l = length(metric, &curve);
        if l < best.1 {
            best = (s, l);
        }
    }
    Ok(best)
}

fn speed_cap_violations(metric: &FinslerMetric, class: Winding, report: &MinimizerReport) -> finsler_core::Result<usize> {
    let mut violations = 0;
    for curve in &report.minimizers {
        if !verify_speed_cap(metric, curve, class, &ReferenceMetric)? {
            violations += 1;
        }
    }
    Ok(violations)
}

struct UniquenessPoint {
    t: f64,
    spread: f64,
    clusters: usize,
    height: f64,
    oracle_height: f64,
    best_length: f64,
    oracle_length: f64,
    violations: usize,
}

fn uniqueness(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let class = config.class;
    let solver = solver_config(config);
    let mut points = Vec::new();
    for (index, &t) in config.t_values.iter().enumerate() {
        let outcome = (|| {
            let metric = config.metric.conformal_scale(&config.bump.factor(t))?;
            let report = minimizer_set(&metric, class, &solver)?;
            let violations = speed_cap_violations(&metric, class, &report)?;
            let (oracle_height, oracle_length) = straight_oracle(&metric, class, solver.vertices, ORACLE_TRANSLATES)?;
            Ok::<_, finsler_core::Error>((report, violations, oracle_height, oracle_length))
        })();
        match outcome {
            Ok((report, violations, oracle_height, oracle_length)) => {
                let height = mean_height(&report.clusters[0].representative);
                points.push(UniquenessPoint {
                    t,
                    spread: report.spread,
                    clusters: report.clusters.len(),
                    height,
                    oracle_height,
                    best_length: report.best_length,
                    oracle_length,
                    violations,
                });
                records.push(Record::Run(Run::Uniqueness {
                    index,
                    t,
                    bump: config.bump.name().to_string(),
                    starts: report.runs.len(),
                    converged_starts: report.runs.iter().filter(|r| r.converged).count(),
                    clusters: report.clusters.len(),
                    spread: report.spread,
                    best_length: report.best_length,
                    mean_height: height,
                    oracle_height,
                    oracle_length,
                    speed_cap_violations: violations,
                    representatives: report.clusters.iter().map(|c| vertices_of(&c.representative)).collect(),
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }

    let mut verdicts = Vec::new();
    if let Some(flat) = points.iter().find(|p| p.t == 0.0) {
        verdicts.push(Verdict::new(
            "flat-multiplicity",
            flat.spread >= FLAT_SPREAD,
            format!("spread {:.4} at t = 0 (need >= {FLAT_SPREAD})", flat.spread),
        ));
    }
    if let Some(top) = points.iter().filter(|p| p.t > 0.0).max_by(|a, b| a.t.total_cmp(&b.t)) {
        let target = config.target_height.unwrap_or(top.oracle_height);
        let dh = circle_distance(top.height, target);
        let dl = (top.best_length - top.oracle_length).abs() / top.oracle_length;
        verdicts.push(Verdict::new("single-cluster", top.clusters == 1, format!("{} clusters at t = {}", top.clusters, top.t)));
        verdicts.push(Verdict::new(
            "unique-spread",
            top.spread <= UNIQUE_SPREAD,
            format!("spread {:.3e} at t = {} (need <= {UNIQUE_SPREAD})", top.spread, top.t),
        ));
        verdicts.push(Verdict::new(
            "trough-height",
            dh <= HEIGHT_TOL,
            format!("mean height {:.4} vs {:.4} (oracle {:.4})", top.height, target, top.oracle_height),
        ));
        verdicts.push(Verdict::new(
            "trough-length",
            dl <= LENGTH_REL_TOL,
            format!("length {:.6} vs oracle {:.6}", top.best_length, top.oracle_length),
        ));
    }
    if points.len() >= 2 {
        let mut sorted: Vec<&UniquenessPoint> = points.iter().collect();
        sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
        let monotone = sorted.windows(2).all(|w| w[1].spread <= w[0].spread);
        let listing: Vec<String> = sorted.iter().map(|p| format!("{}:{:.3e}", p.t, p.spread)).collect();
        verdicts.push(Verdict::new("spread-monotone", monotone, listing.join(" ")));
    }
    let violations: usize = points.iter().map(|p| p.violations).sum();
    verdicts.push(Verdict::new("speed-cap", violations == 0, format!("{violations} minimizers exceed the speed cap")));
    verdicts
}

fn cs_property(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool = metric_pool(config, &mut rng);
    let (mut worst_before, mut worst_after, mut negative, mut loose) = (f64::INFINITY, 0.0_f64, 0, 0);
    for index in 0..config.samples {
        let (kind, metric) = &pool[index % pool.len()];
        let class = random_class(&mut rng);
        let curve = random_loop(&mut rng, class, config.solver.vertices);
        let a = action(metric, &curve);
        let gap = cs_gap(metric, &curve);
        match reparametrize_constant_speed(metric, &curve) {
            Ok(resampled) => {
                let after = cs_gap(metric, &resampled);
                worst_before = worst_before.min(gap);
                worst_after = worst_after.max(after / a);
                negative += usize::from(gap < -CS_NEGATIVE_TOL);
                loose += usize::from(after > CS_AFTER_REL_TOL * a);
                records.push(Record::Run(Run::CsProperty {
                    index,
                    metric: kind.to_string(),
                    class: [class.0, class.1],
                    action: a,
                    cs_gap: gap,
                    cs_gap_after: after,
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }
    vec![
        Verdict::new(
            "cs-gap-nonnegative",
            negative == 0,
            format!("{negative} loops below -{CS_NEGATIVE_TOL:e}; smallest gap {worst_before:.3e}"),
        ),
        Verdict::new(
            "cs-gap-after-reparam",
            loose == 0,
            format!("{loose} loops above {CS_AFTER_REL_TOL:e} * action; largest ratio {worst_after:.3e}"),
        ),
    ]
}

/// Random metrics shared by the cs-property samples. Validating a metric costs
/// far more than one loop, so loops cycle through a fixed pool covering every
/// kind equally.
pub const METRIC_POOL: usize = 50;

fn metric_pool(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Vec<(&'static str, FinslerMetric)> {
    if config.metric_given {
        return vec![("configured", config.metric.clone())];
    }
    (0..METRIC_POOL)
        .map(|i| {
            let kind = MetricKind::ALL[i % MetricKind::ALL.len()];
            (kind.name(), random_metric_of(kind, rng))
        })
        .collect()
}

/// The configured metric if the file names one, else a random one.
fn sample_metric(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> (&'static str, FinslerMetric) {
    if config.metric_given {
        ("configured", config.metric.clone())
    } else {
        let (kind, metric): (MetricKind, FinslerMetric) = random_metric(rng);
        (kind.name(), metric)
    }
}

fn speed_cap(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let solver = solver_config(config);
    let homogeneous = config.metric.is_homogeneous();
    let (mut total_violations, mut length_misses) = (0, Vec::new());
    for (index, &class) in config.classes.iter().enumerate() {
        let outcome = (|| {
            let report = minimizer_set(&config.metric, class, &solver)?;
            let violations = speed_cap_violations(&config.metric, class, &report)?;
            let straight = length(&config.metric, &DiscreteLoop::straight(Point::zeros(), class, solver.vertices)?);
            let bound = speed_bound(&config.metric, class, &ReferenceMetric)?;
            Ok::<_, finsler_core::Error>((report, violations, straight, bound))
        })();
        match outcome {
            Ok((report, violations, straight, bound)) => {
                total_violations += violations;
                if homogeneous && (report.best_length - straight).abs() > LENGTH_REL_TOL * straight {
                    length_misses.push(format!("({},{}): {:.6} vs {:.6}", class.0, class.1, report.best_length, straight));
                }
                records.push(Record::Run(Run::SpeedCap {
                    index,
                    class: [class.0, class.1],
                    starts: report.runs.len(),
                    converged_starts: report.runs.iter().filter(|r| r.converged).count(),
                    best_length: report.best_length,
                    straight_length: straight,
                    speed_bound: bound,
                    violations,
                    representative: vertices_of(&report.clusters[0].representative),
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }
    let mut verdicts = vec![Verdict::new(
        "speed-cap",
        total_violations == 0,
        format!("{total_violations} converged minimizers exceed the speed cap"),
    )];
    if homogeneous {
        verdicts.push(Verdict::new(
            "straight-length",
            length_misses.is_empty(),
            if length_misses.is_empty() { "all classes within 0.5% of the straight loop".to_string() } else { length_misses.join("; ") },
        ));
    }
    verdicts
}

/// Minimum, active set and diameter by direct enumeration of vertex values,
/// with the same relative cutoff as the engine.
pub fn enumerate_argmin(f: &Functional, body: &ConvexBody, tol: f64) -> (f64, Vec<usize>, f64) {
    let c = f.coefficients();
    let values: Vec<f64> = body.vertices().iter().map(|v| (0..c.len()).map(|k| c[k] * v[k]).sum()).collect();
    let m = values.iter().copied().fold(f64::INFINITY, f64::min);
    let active: Vec<usize> = (0..values.len()).filter(|&i| values[i] <= m + tol * (1.0 + m.abs())).collect();
    let mut diameter = 0.0_f64;
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let d: f64 = body.vertices()[i].iter().zip(body.vertices()[j].iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            diameter = diameter.max(d.sqrt());
        }
    }
    (m, active, diameter)
}

fn argmin_agrees(f: &Functional, body: &ConvexBody, opts: &ManeOptions) -> finsler_core::Result<bool> {
    let set = argmin_set(f, body, opts.tol)?;
    let (m, active, diameter) = enumerate_argmin(f, body, opts.tol);
    Ok((set.value - m).abs() <= 1e-12 * (1.0 + m.abs()) && set.active_vertices == active && (set.diameter - diameter).abs() <= 1e-12)
}

fn mane_polytope(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let opts = ManeOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = &config.mane;
    let (mut successes, mut worst_t_ratio, mut broken, mut disagreements) = (0, 0.0_f64, 0, 0);
    for index in 0..p.trials {
        let body = random_polytope(&mut rng, p.max_dim, p.max_vertices);
        let seed: u64 = rng.random();
        let f = Functional::zero(body.dim());
        let eps = p.eps_rel * body.diameter();
        let outcome = (|| {
            let result = shrink_argmin(&f, &body, eps, p.delta, seed, &opts)?;
            let agrees = argmin_agrees(&f, &body, &opts)? && argmin_agrees(&result.functional, &body, &opts)?;
            Ok::<_, finsler_core::Error>((result, agrees))
        })();
        match outcome {
            Ok((result, agrees)) => {
                let norm = (result.functional.coefficients() - f.coefficients()).norm();
                let t_max = p.delta / result.direction.norm();
                let ok = result.diameter <= eps && norm <= p.delta * (1.0 + 1e-12) && result.t <= t_max;
                successes += usize::from(ok);
                worst_t_ratio = worst_t_ratio.max(result.t / t_max);
                broken += usize::from(!result.assertions_hold());
                disagreements += usize::from(!agrees);
                records.push(Record::Run(Run::ManePolytope {
                    index,
                    dim: body.dim(),
                    vertex_count: body.vertices().len(),
                    diam_before: result.initial_diameter,
                    diam_after: result.diameter,
                    eps,
                    t: result.t,
                    t_max,
                    norm,
                    steps: result.steps.len(),
                    assertions_hold: result.assertions_hold(),
                    oracle_agrees: agrees,
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }
    vec![
        Verdict::new(
            "perturbation-success",
            successes == p.trials,
            format!("{successes}/{} trials with diam <= eps and |f* - f| <= delta; max t / t_max = {worst_t_ratio:.3}", p.trials),
        ),
        Verdict::new("line-search-assertions", broken == 0, format!("{broken} trials with a failed line-search inequality")),
        Verdict::new("argmin-oracle", disagreements == 0, format!("{disagreements} trials disagree with vertex enumeration")),
    ]
}

fn consistency(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let res = config.resolution;
    let (mut over_bound, mut mass_misses, mut constant_misses) = (0, 0, 0);
    for index in 0..config.samples {
        let (kind, metric) = sample_metric(config, &mut rng);
        let constant_lambda = index % 10 == 0;
        let lambda = if constant_lambda {
            ConformalFactor::constant(rng.random_range(0.5..2.0))
        } else {
            random_factor(&mut rng, 1.0, 0.1, 3)
        };
        let class = random_class(&mut rng);
        let curve = random_loop(&mut rng, class, config.solver.vertices);
        let outcome = (|| {
            let grid = pushforward(&metric, &loop_measure(&curve, f64::INFINITY)?, res)?;
            let gap = action_consistency(&metric, &lambda, &curve, res)?;
            Ok::<_, finsler_core::Error>((grid.total_mass(), gap))
        })();
        match outcome {
            Ok((total_mass, gap)) => {
                let a = action(&metric, &curve);
                let scale = a.abs().max(1.0);
                let mass_error = (total_mass - a).abs();
                let bound = consistency_bound(&lambda, res, total_mass);
                over_bound += usize::from(gap > bound + EXACT_REL_TOL * scale);
                mass_misses += usize::from(mass_error > EXACT_REL_TOL * scale);
                constant_misses += usize::from(constant_lambda && gap > EXACT_REL_TOL * scale);
                records.push(Record::Run(Run::Consistency {
                    index,
                    metric: kind.to_string(),
                    constant_lambda,
                    action: a,
                    total_mass,
                    mass_error,
                    gap,
                    bound,
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }
    vec![
        Verdict::new("gap-within-bound", over_bound == 0, format!("{over_bound} triples above Lip * sqrt(2) / {res} * mass")),
        Verdict::new("mass-identity", mass_misses == 0, format!("{mass_misses} triples with |mass - action| > 1e-12 * max(1, action)")),
        Verdict::new("constant-lambda-exact", constant_misses == 0, format!("{constant_misses} constant-factor triples with a gap")),
    ]
}

fn semicontinuity(config: &ExperimentConfig, records: &mut Vec<Record>) -> Vec<Verdict> {
    let opts = ManeOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = &config.mane;
    let scales: Vec<f64> = (1..=config.halvings).map(|k| 0.5f64.powi(k as i32)).collect();
    let tail = config.tail_from - 1;
    let (mut violations, mut non_monotone, mut not_shrinking) = (0, 0, 0);
    for index in 0..config.samples {
        let body = random_polytope(&mut rng, p.max_dim, p.max_vertices);
        // every other base functional is 0, whose argmin face is the whole body
        let f = if index % 2 == 0 { Functional::zero(body.dim()) } else { random_functional(&mut rng, body.dim()) };
        let direction = unit(random_functional(&mut rng, body.dim()));
        let perturbations = vec![direction; scales.len()];
        match semicontinuity_probe(&f, &body, &perturbations, &scales, DIAMETER_TOL, &opts) {
            Ok(report) => {
                let tail_violations = report.violations_from(tail);
                let tail_monotone = report.gaps_monotone_from(tail, GAP_MONOTONE_SLACK);
                let gaps: Vec<f64> = report.steps.iter().map(|s| s.value_gap).collect();
                violations += tail_violations;
                non_monotone += usize::from(!tail_monotone);
                // |m(f_n) - m(f)| <= scale * max |g| on the body, and |g| <= sqrt(dim) there
                let last = report.steps.last().expect("at least one scale");
                not_shrinking += usize::from(last.value_gap > last.scale * (body.dim() as f64).sqrt() * (1.0 + 1e-12));
                records.push(Record::Run(Run::Semicontinuity {
                    index,
                    dim: body.dim(),
                    vertex_count: body.vertices().len(),
                    base_value: report.base.value,
                    base_diameter: report.base.diameter,
                    tail_violations,
                    tail_monotone,
                    gaps,
                }));
            }
            Err(e) => records.push(failure(config, index, e)),
        }
    }
    vec![
        Verdict::new(
            "argmin-upper-semicontinuous",
            violations == 0,
            format!("{violations} tail steps with diam M(f_n) > diam M(f) + {DIAMETER_TOL:e} (k >= {})", config.tail_from),
        ),
        Verdict::new("value-gap-monotone", non_monotone == 0, format!("{non_monotone} polytopes with a non-monotone tail")),
        Verdict::new("value-gap-vanishes", not_shrinking == 0, format!("{not_shrinking} polytopes whose last gap exceeds scale * sqrt(dim)")),
    ]
}

fn unit(f: Functional) -> Functional {
    let norm = f.norm();
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        Functional::from_vector(DVector::from_element(f.dim(), 1.0 / (f.dim() as f64).sqrt())).expect("finite")
    }
}
