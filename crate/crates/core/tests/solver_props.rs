mod common;

use finsler_core::fourier::ConformalFactor;
use finsler_core::loops::{cs_gap, length, CONSTANT_SPEED_TOL};
use finsler_core::metric::{FinslerMetric, Point, ReferenceMetric};
use finsler_core::solver::{action_gradient, loop_distance, minimizer_set, refine, shortest_loop, verify_speed_cap, InitialLoop, SolverConfig};
use finsler_core::DiscreteLoop;
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_class, random_loop, random_metric};

fn config(vertices: usize) -> SolverConfig {
    SolverConfig { vertices, num_starts: 6, ..SolverConfig::default() }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let metric = random_metric(&mut rng);
        let class = random_class(&mut rng);
        let c = random_loop(&mut rng, class, 32);
        let (_, grad) = action_gradient(&metric, &c);
        let scale = grad.iter().map(|g| g.amax()).fold(0.0, f64::max);
        let h = 1e-6;
        for i in 0..c.vertex_count() {
            for axis in 0..2 {
                let bump = |s: f64| {
                    let mut v = c.vertices().to_vec();
                    v[i][axis] += s;
                    finsler_core::loops::action(&metric, &DiscreteLoop::new(v, class).unwrap())
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                assert!((grad[i][axis] - fd).abs() <= 1e-5 * grad[i][axis].abs().max(1e-3 * scale), "vertex {i} axis {axis}");
            }
        }
    }
}

#[test]
fn descent_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..6 {
        let metric = random_metric(&mut rng);
        let class = random_class(&mut rng);
        let init = random_loop(&mut rng, class, 64);
        let g = shortest_loop(&metric, class, &config(64), InitialLoop::Given(init)).unwrap();
        assert!(g.action_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(g.converged, "{class:?} iters {} gnorm {:e} len {}", g.iterations, g.gradient_norm, length(&metric, &g.curve));
        assert!(cs_gap(&metric, &g.curve) <= CONSTANT_SPEED_TOL * g.action, "{class:?} gap {:e} action {} iters {}", cs_gap(&metric, &g.curve), g.action, g.iterations);
        assert!(verify_speed_cap(&metric, &g.curve, class, &ReferenceMetric).unwrap());
    }
}

#[test]
fn refinement_changes_length_little() {
    let metrics = [FinslerMetric::euclidean(), FinslerMetric::constant_randers(0.3, -0.2).unwrap()];
    for metric in &metrics {
        for class in [(1, 0), (2, 1), (-1, 3)] {
            let coarse = shortest_loop(metric, class, &config(64), InitialLoop::Straight).unwrap();
            let fine = shortest_loop(metric, class, &config(128), InitialLoop::Given(refine(&coarse.curve).unwrap())).unwrap();
            let (a, b) = (length(metric, &coarse.curve), length(metric, &fine.curve));
            assert!((a - b).abs() <= 5e-3 * a, "{class:?}: {a} vs {b}");
        }
    }
}

#[test]
fn randers_classes_differ_by_the_one_form() {
    let beta = Vector2::new(0.2, -0.15);
    let metric = FinslerMetric::constant_randers(beta.x, beta.y).unwrap();
    for class in [(1, 0), (1, 1), (2, -1)] {
        let forward = minimizer_set(&metric, class, &config(64)).unwrap().best_length;
        let backward = minimizer_set(&metric, (-class.0, -class.1), &config(64)).unwrap().best_length;
        let w = Vector2::new(class.0 as f64, class.1 as f64);
        // straight loops are optimal for constant coefficients
        assert!((forward - (w.norm() + beta.dot(&w))).abs() < 5e-3 * forward);
        assert!((forward - backward - 2.0 * beta.dot(&w)).abs() < 1e-2);
    }
}

#[test]
fn positive_scaling_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lambda = common::random_factor(&mut rng, 1.0, 0.1, 2);
    let metric = FinslerMetric::euclidean().conformal_scale(&lambda).unwrap();
    let kappa: f64 = 2.5;
    let scaled = metric.conformal_scale(&ConformalFactor::constant(kappa * kappa)).unwrap();
    let a = minimizer_set(&metric, (1, 0), &config(64)).unwrap();
    let b = minimizer_set(&scaled, (1, 0), &config(64)).unwrap();
    assert_eq!(a.clusters.len(), b.clusters.len());
    for (x, y) in a.clusters.iter().zip(&b.clusters) {
        assert!((y.length - kappa * x.length).abs() <= 1e-6 * y.length);
        assert!(loop_distance(&x.representative, &y.representative).unwrap() <= 0.05);
    }
}

#[test]
fn flat_minimizers_are_straight() {
    for class in [(1, 0), (1, 1), (3, 4)] {
        let g = shortest_loop(&FinslerMetric::euclidean(), class, &config(128), InitialLoop::Straight).unwrap();
        let w = Vector2::new(class.0 as f64, class.1 as f64);
        assert!((length(&FinslerMetric::euclidean(), &g.curve) - w.norm()).abs() < 5e-3 * w.norm());
        let normal = Vector2::new(-w.y, w.x) / w.norm();
        let heights: Vec<f64> = g.curve.vertices().iter().map(|v: &Point| v.dot(&normal)).collect();
        let spread = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - heights.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-3, "{class:?} spread {spread}");
    }
}
