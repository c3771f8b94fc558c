#![allow(dead_code)]

use finsler_core::fourier::{ConformalFactor, FourierMode};
use finsler_core::metric::{FinslerMetric, Point, RiemannianField};
use finsler_core::DiscreteLoop;
use nalgebra::Vector2;
use rand::Rng;

/// Positive factor `offset + small Fourier part` with every coefficient below
/// `amplitude`, so `lambda >= offset - 2 * modes * amplitude`.
pub fn random_factor(rng: &mut impl Rng, offset: f64, amplitude: f64, modes: usize) -> ConformalFactor {
    let list: Vec<FourierMode> = (0..modes)
        .map(|_| {
            FourierMode::new(
                rng.random_range(-2..=2),
                rng.random_range(0..=2),
                rng.random_range(-amplitude..amplitude),
                rng.random_range(-amplitude..amplitude),
            )
        })
        .collect();
    ConformalFactor::new(offset, list).unwrap()
}

pub fn random_riemannian(rng: &mut impl Rng) -> RiemannianField {
    RiemannianField::new(
        random_factor(rng, 1.2, 0.05, 2),
        random_factor(rng, 0.0, 0.05, 2),
        random_factor(rng, 1.0, 0.05, 2),
    )
    .unwrap()
}

pub fn random_randers(rng: &mut impl Rng) -> FinslerMetric {
    let (bx, by) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let beta = [random_factor(rng, bx, 0.04, 2), random_factor(rng, by, 0.04, 2)];
    FinslerMetric::randers(random_riemannian(rng), beta).unwrap()
}

/// One of: Euclidean, Riemannian, Randers, conformal over any of those.
pub fn random_metric(rng: &mut impl Rng) -> FinslerMetric {
    match rng.random_range(0..5) {
        0 => FinslerMetric::euclidean(),
        1 => FinslerMetric::riemannian(random_riemannian(rng)),
        2 => random_randers(rng),
        3 => FinslerMetric::euclidean().conformal_scale(&random_factor(rng, 1.0, 0.1, 3)).unwrap(),
        _ => random_randers(rng).conformal_scale(&random_factor(rng, 1.5, 0.1, 3)).unwrap(),
    }
}

pub fn random_class(rng: &mut impl Rng) -> (i64, i64) {
    loop {
        let c = (rng.random_range(-3..=3), rng.random_range(-3..=3));
        if c != (0, 0) {
            return c;
        }
    }
}

/// Straight lift of `class` bent by a few smooth modes plus vertex noise and
/// uneven parameter spacing. The bends are small enough that the curve never
/// turns back on itself.
pub fn random_loop(rng: &mut impl Rng, class: (i64, i64), n: usize) -> DiscreteLoop {
    let w = Vector2::new(class.0 as f64, class.1 as f64);
    let start = Point::new(rng.random(), rng.random());
    // the bends move at most 0.39 |w| per unit parameter in total, slower than
    // the warped straight motion (at least 0.7 |w|), so the lift keeps moving forward
    let bends: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| {
            let a = w.norm() / (20.0 * std::f64::consts::PI * k as f64) / std::f64::consts::SQRT_2;
            (rng.random_range(-a..a), rng.random_range(-a..a), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let warp = rng.random_range(-0.3..0.3);
    let vertices = (0..n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let s = s + warp * (std::f64::consts::TAU * s).sin() / std::f64::consts::TAU;
            let mut p = start + w * s;
            for (k, (ax, ay, phase)) in bends.iter().enumerate() {
                let arg = std::f64::consts::TAU * (k + 1) as f64 * s + phase;
                p += Vector2::new(ax * arg.sin(), ay * arg.cos());
            }
            p + Vector2::new(rng.random_range(-1e-3..1e-3), rng.random_range(-1e-3..1e-3))
        })
        .collect();
    DiscreteLoop::new(vertices, class).unwrap()
}
