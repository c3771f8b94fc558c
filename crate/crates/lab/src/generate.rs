//! Seeded random metrics, loops and polytopes for the sampling experiments.

use std::f64::consts::{PI, SQRT_2, TAU};

use finsler_core::fourier::{ConformalFactor, FourierMode};
use finsler_core::mane::{ConvexBody, Functional};
use finsler_core::metric::{FinslerMetric, Point, RiemannianField};
use finsler_core::{DiscreteLoop, Winding};
use nalgebra::Vector2;
use rand::Rng;

/// `offset` plus `modes` Fourier modes with coefficients below `amplitude`
/// in absolute value.
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
    ConformalFactor::new(offset, list).expect("finite coefficients")
}

pub fn random_riemannian(rng: &mut impl Rng) -> RiemannianField {
    let g11 = random_factor(rng, 1.2, 0.05, 2);
    let g12 = random_factor(rng, 0.0, 0.05, 2);
    let g22 = random_factor(rng, 1.0, 0.05, 2);
    RiemannianField::new(g11, g12, g22).expect("diagonally dominant field")
}

pub fn random_randers(rng: &mut impl Rng) -> FinslerMetric {
    let (bx, by) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let beta = [random_factor(rng, bx, 0.04, 2), random_factor(rng, by, 0.04, 2)];
    FinslerMetric::randers(random_riemannian(rng), beta).expect("|beta| well below 1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Euclidean,
    Riemannian,
    Randers,
    Conformal,
    ConformalRanders,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [Self::Euclidean, Self::Riemannian, Self::Randers, Self::Conformal, Self::ConformalRanders];

    pub fn name(self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Riemannian => "riemannian",
            Self::Randers => "randers",
            Self::Conformal => "conformal",
            Self::ConformalRanders => "conformal-randers",
        }
    }
}

pub fn random_metric_of(kind: MetricKind, rng: &mut impl Rng) -> FinslerMetric {
    match kind {
        MetricKind::Euclidean => FinslerMetric::euclidean(),
        MetricKind::Riemannian => FinslerMetric::riemannian(random_riemannian(rng)),
        MetricKind::Randers => random_randers(rng),
        MetricKind::Conformal => {
            let factor = random_factor(rng, 1.0, 0.1, 3);
            FinslerMetric::euclidean().conformal_scale(&factor).expect("positive factor")
        }
        MetricKind::ConformalRanders => {
            let base = random_randers(rng);
            base.conformal_scale(&random_factor(rng, 1.5, 0.1, 3)).expect("positive factor")
        }
    }
}

pub fn random_metric(rng: &mut impl Rng) -> (MetricKind, FinslerMetric) {
    let kind = MetricKind::ALL[rng.random_range(0..MetricKind::ALL.len())];
    (kind, random_metric_of(kind, rng))
}

pub fn random_class(rng: &mut impl Rng) -> Winding {
    loop {
        let c = (rng.random_range(-3..=3), rng.random_range(-3..=3));
        if c != (0, 0) {
            return c;
        }
    }
}

/// Straight lift of `class` bent by three smooth modes, with uneven parameter
/// spacing and `1e-3` vertex noise. The bends are slower than the forward
/// motion, so the lift never turns back on itself.
pub fn random_loop(rng: &mut impl Rng, class: Winding, n: usize) -> DiscreteLoop {
    let w = Vector2::new(class.0 as f64, class.1 as f64);
    let start = Point::new(rng.random(), rng.random());
    // bend speed at most 0.39 |w|, forward speed at least 0.7 |w|
    let bends: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| {
            let a = w.norm() / (20.0 * PI * k as f64) / SQRT_2;
            (rng.random_range(-a..a), rng.random_range(-a..a), rng.random_range(0.0..TAU))
        })
        .collect();
    let warp = rng.random_range(-0.3..0.3);
    let vertices = (0..n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let s = s + warp * (TAU * s).sin() / TAU;
            let mut p = start + w * s;
            for (k, (ax, ay, phase)) in bends.iter().enumerate() {
                let arg = TAU * (k + 1) as f64 * s + phase;
                p += Vector2::new(ax * arg.sin(), ay * arg.cos());
            }
            p + Vector2::new(rng.random_range(-1e-3..1e-3), rng.random_range(-1e-3..1e-3))
        })
        .collect();
    DiscreteLoop::new(vertices, class).expect("enough distinct vertices")
}

/// Polytope with `2..=max_vertices` vertices drawn uniformly from
/// `[-1, 1]^dim`, `dim` in `1..=max_dim`.
pub fn random_polytope(rng: &mut impl Rng, max_dim: usize, max_vertices: usize) -> ConvexBody {
    let dim = rng.random_range(1..=max_dim);
    let count = rng.random_range(2..=max_vertices.max(2));
    let rows: Vec<Vec<f64>> = (0..count).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    ConvexBody::from_rows(&rows).expect("finite coordinates")
}

pub fn random_functional(rng: &mut impl Rng, dim: usize) -> Functional {
    Functional::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite coefficients")
}
