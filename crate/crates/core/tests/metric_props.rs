mod common;

use std::f64::consts::TAU;

use finsler_core::fourier::{seminorm_distance, ConformalFactor, FourierMode};
use finsler_core::metric::{comparison_constant, fiber_hessian, verify_convexity, FinslerMetric, Point, ReferenceMetric, COMPARISON_INFLATION};
use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_factor, random_metric};

fn unit(angle: f64) -> Vector2<f64> {
    Vector2::new(angle.cos(), angle.sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn positive_homogeneity(seed in any::<u64>(), a in 1e-3..=10.0f64, x in 0.0..1.0f64, y in 0.0..1.0f64, angle in 0.0..TAU) {
        let metric = random_metric(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = Point::new(x, y);
        let v = unit(angle) * 0.7;
        let f = metric.speed(&p, &v);
        prop_assert!(f > 0.0);
        prop_assert!((metric.speed(&p, &(v * a)) - a * f).abs() <= 1e-10 * a * f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conformal_composition(seed in any::<u64>(), x in 0.0..1.0f64, y in 0.0..1.0f64, angle in 0.0..TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metric = random_metric(&mut rng);
        let l1 = random_factor(&mut rng, 1.0, 0.1, 3);
        let l2 = random_factor(&mut rng, 2.0, 0.2, 2);
        let twice = metric.conformal_scale(&l1).unwrap().conformal_scale(&l2).unwrap();
        let once = metric.conformal_scale(&l1.product(&l2)).unwrap();
        let (p, v) = (Point::new(x, y), unit(angle));
        let a = twice.speed(&p, &v);
        prop_assert!((a - once.speed(&p, &v)).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn seminorm_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_factor(&mut rng, 1.0, 0.5, 3);
        let g = random_factor(&mut rng, 0.5, 0.5, 3);
        let h = random_factor(&mut rng, 0.0, 0.5, 3);
        let d = |a: &ConformalFactor, b: &ConformalFactor| seminorm_distance(a, b, 8);
        prop_assert_eq!(d(&f, &f), 0.0);
        prop_assert!(d(&f, &g) > 0.0);
        prop_assert!((d(&f, &g) - d(&g, &f)).abs() <= 1e-12);
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
    }
}

#[test]
fn sandwich_holds_on_fresh_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..4 {
        let metric = random_metric(&mut rng);
        let c = comparison_constant(&metric, &ReferenceMetric, 32).unwrap();
        assert!(c >= 1.0);
        for _ in 0..10_000 {
            let p = Point::new(rng.random(), rng.random());
            let v = unit(rng.random::<f64>() * TAU);
            let f = metric.speed(&p, &v);
            assert!(f / c <= 1.0 && 1.0 <= c * f, "F = {f}, c = {c}");
        }
    }
}

#[test]
fn randers_comparison_constant_matches_direction_scan() {
    let metric = FinslerMetric::constant_randers(0.5, 0.0).unwrap();
    let scan = (0..100_000)
        .map(|i| {
            let f = metric.speed(&Point::zeros(), &unit(TAU * i as f64 / 100_000.0));
            f.max(1.0 / f)
        })
        .fold(1.0, f64::max);
    assert!((scan - 2.0).abs() < 1e-9);
    let c = comparison_constant(&metric, &ReferenceMetric, 16).unwrap();
    assert!((c - scan * COMPARISON_INFLATION).abs() < 1e-6);
}

/// Exact Hessian of `(|v| + b.v)^2`.
fn randers_hessian(beta: Vector2<f64>, v: Vector2<f64>) -> Matrix2<f64> {
    let r = v.norm();
    let f = r + beta.dot(&v);
    let grad = v / r + beta;
    let curvature = (Matrix2::identity() - v * v.transpose() / (r * r)) / r;
    2.0 * (grad * grad.transpose() + curvature * f)
}

#[test]
fn randers_convexity_against_exact_hessian() {
    let beta = Vector2::new(0.3, -0.4);
    let metric = FinslerMetric::constant_randers(beta.x, beta.y).unwrap();
    let mut min_exact = f64::INFINITY;
    for i in 0..10_000 {
        let v = unit(TAU * i as f64 / 10_000.0);
        let exact = randers_hessian(beta, v);
        let numeric = fiber_hessian(&metric, &Point::zeros(), &v, 1e-4);
        assert!((exact - numeric).abs().max() < 1e-5);
        min_exact = min_exact.min(exact.symmetric_eigenvalues().min());
    }
    assert!(min_exact > 0.0);
    let report = verify_convexity(&metric, 2000, 3).unwrap();
    assert!(report.passed);
    assert!(report.min_eigenvalue >= min_exact - 1e-5);
}

#[test]
fn euclidean_convexity_is_twice_identity() {
    let report = verify_convexity(&FinslerMetric::euclidean(), 200, 0).unwrap();
    assert!((report.min_eigenvalue - 2.0).abs() < 1e-6);
}

#[test]
fn conformal_example_value() {
    let lambda = ConformalFactor::new(1.0, [FourierMode::new(0, 1, 0.2, 0.0)]).unwrap();
    let metric = FinslerMetric::euclidean().conformal_scale(&lambda).unwrap();
    let f = metric.evaluate(&Point::zeros(), &Vector2::new(1.0, 0.0)).unwrap();
    assert!((f - 1.2f64.sqrt()).abs() < 1e-15);
    let doubled = FinslerMetric::euclidean().conformal_scale(&ConformalFactor::constant(4.0)).unwrap();
    assert_eq!(doubled.speed(&Point::new(0.3, 0.9), &Vector2::new(3.0, 4.0)), 10.0);
}

#[test]
fn invalid_randers_goes_negative_unchecked() {
    let base = finsler_core::RiemannianField::euclidean();
    let beta = [ConformalFactor::constant(1.2), ConformalFactor::constant(0.0)];
    assert!(FinslerMetric::randers(base.clone(), beta.clone()).is_err());
    let metric = FinslerMetric::randers_unchecked(base, beta);
    assert!(metric.speed(&Point::zeros(), &Vector2::new(-1.0, 0.0)) < 0.0);
}
