//! Finsler metrics on the flat torus.
//!
//! Three variants cover everything the experiments need: Riemannian metrics
//! with Fourier coefficient fields, Randers metrics `|v|_g + beta(v)`, and
//! conformal rescalings `sqrt(lambda) * F` of any metric. All of them are
//! positively homogeneous of degree one in `v`; Randers metrics with
//! `beta != 0` are not reversible.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fourier::{ConformalFactor, VERIFY_GRID};

/// A point of the torus, or of its universal cover `R^2`.
pub type Point = Vector2<f64>;

/// Safety factor applied to the sampled comparison constant.
pub const COMPARISON_INFLATION: f64 = 1.01;

/// Minimum Hessian eigenvalue accepted by [`verify_convexity`].
pub const CONVEXITY_TOLERANCE: f64 = 1e-6;

/// Symmetric coefficient field `g(x)` of a Riemannian metric.
#[derive(Clone, Debug, PartialEq)]
pub struct RiemannianField {
    pub g11: ConformalFactor,
    pub g12: ConformalFactor,
    pub g22: ConformalFactor,
}

impl RiemannianField {
    pub fn euclidean() -> Self {
        Self {
            g11: ConformalFactor::constant(1.0),
            g12: ConformalFactor::constant(0.0),
            g22: ConformalFactor::constant(1.0),
        }
    }

    /// Checks positive definiteness on the verification grid.
    pub fn new(g11: ConformalFactor, g12: ConformalFactor, g22: ConformalFactor) -> Result<Self> {
        let field = Self { g11, g12, g22 };
        let res = VERIFY_GRID;
        for i in 0..res {
            for j in 0..res {
                let p = Point::new(i as f64 / res as f64, j as f64 / res as f64);
                let g = field.matrix(&p);
                if g[(0, 0)] <= 0.0 || g.determinant() <= 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "coefficient field is not positive definite at ({}, {})",
                        p.x, p.y
                    )));
                }
            }
        }
        Ok(field)
    }

    pub fn is_constant(&self) -> bool {
        self.g11.is_constant() && self.g12.is_constant() && self.g22.is_constant()
    }

    pub fn matrix(&self, x: &Point) -> Matrix2<f64> {
        let g12 = self.g12.value(x);
        Matrix2::new(self.g11.value(x), g12, g12, self.g22.value(x))
    }

    /// `g(x)` together with `dg/dx` and `dg/dy`.
    fn matrix_jet(&self, x: &Point) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
        let (a, da) = self.g11.value_and_gradient(x);
        let (b, db) = self.g12.value_and_gradient(x);
        let (c, dc) = self.g22.value_and_gradient(x);
        (
            Matrix2::new(a, b, b, c),
            Matrix2::new(da.x, db.x, db.x, dc.x),
            Matrix2::new(da.y, db.y, db.y, dc.y),
        )
    }

    fn norm(&self, x: &Point, v: &Vector2<f64>) -> f64 {
        v.dot(&(self.matrix(x) * v)).max(0.0).sqrt()
    }

    /// Dual norm `sqrt(b^T g^-1 b)` of a covector.
    fn dual_norm(&self, x: &Point, b: &Vector2<f64>) -> f64 {
        let inv = self.matrix(x).try_inverse().unwrap_or_else(Matrix2::zeros);
        b.dot(&(inv * b)).max(0.0).sqrt()
    }
}

/// Value and first derivatives of `F` at `(x, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedJet {
    pub value: f64,
    /// Gradient in the base point.
    pub dx: Vector2<f64>,
    /// Gradient in the fiber direction.
    pub dv: Vector2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FinslerMetric {
    Riemannian(RiemannianField),
    Randers { base: RiemannianField, beta: [ConformalFactor; 2] },
    Conformal { base: Box<FinslerMetric>, factor: ConformalFactor },
}

impl FinslerMetric {
    pub fn euclidean() -> Self {
        Self::Riemannian(RiemannianField::euclidean())
    }

    pub fn riemannian(field: RiemannianField) -> Self {
        Self::Riemannian(field)
    }

    /// Randers metric `|v|_g + beta(v)`; requires `|beta|_g* < 1` on the grid.
    pub fn randers(base: RiemannianField, beta: [ConformalFactor; 2]) -> Result<Self> {
        let res = VERIFY_GRID;
        let mut sup = 0.0_f64;
        for i in 0..res {
            for j in 0..res {
                let p = Point::new(i as f64 / res as f64, j as f64 / res as f64);
                let b = Vector2::new(beta[0].value(&p), beta[1].value(&p));
                sup = sup.max(base.dual_norm(&p, &b));
            }
        }
        if sup >= 1.0 {
            return Err(Error::InvalidMetric(format!("Randers one-form has norm {sup} >= 1")));
        }
        Ok(Self::Randers { base, beta })
    }

    /// Randers metric with a constant one-form over the Euclidean metric.
    pub fn constant_randers(bx: f64, by: f64) -> Result<Self> {
        Self::randers(RiemannianField::euclidean(), [ConformalFactor::constant(bx), ConformalFactor::constant(by)])
    }

    /// Skips the norm check on `beta`. The result may fail positivity.
    pub fn randers_unchecked(base: RiemannianField, beta: [ConformalFactor; 2]) -> Self {
        Self::Randers { base, beta }
    }

    /// The metric `sqrt(lambda) * F`.
    pub fn conformal_scale(&self, factor: &ConformalFactor) -> Result<Self> {
        factor.check_positive()?;
        Ok(Self::Conformal { base: Box::new(self.clone()), factor: factor.clone() })
    }

    /// `F(x, v)`, rejecting non-finite input.
    pub fn evaluate(&self, x: &Point, v: &Vector2<f64>) -> Result<f64> {
        if !(x.x.is_finite() && x.y.is_finite() && v.x.is_finite() && v.y.is_finite()) {
            return Err(Error::InputDomain(format!("non-finite input x={x:?} v={v:?}")));
        }
        Ok(self.speed(x, v))
    }

    /// Unchecked evaluation of `F(x, v)`.
    pub fn speed(&self, x: &Point, v: &Vector2<f64>) -> f64 {
        match self {
            Self::Riemannian(g) => g.norm(x, v),
            Self::Randers { base, beta } => base.norm(x, v) + beta[0].value(x) * v.x + beta[1].value(x) * v.y,
            Self::Conformal { base, factor } => factor.value(x).sqrt() * base.speed(x, v),
        }
    }

    /// `F` and its gradients. At `v = 0` the fiber gradient of the norm part is
    /// undefined and is reported as zero.
    pub fn speed_jet(&self, x: &Point, v: &Vector2<f64>) -> SpeedJet {
        match self {
            Self::Riemannian(g) => riemannian_jet(g, x, v),
            Self::Randers { base, beta } => {
                let norm = riemannian_jet(base, x, v);
                let (b0, db0) = beta[0].value_and_gradient(x);
                let (b1, db1) = beta[1].value_and_gradient(x);
                SpeedJet {
                    value: norm.value + b0 * v.x + b1 * v.y,
                    dx: norm.dx + db0 * v.x + db1 * v.y,
                    dv: norm.dv + Vector2::new(b0, b1),
                }
            }
            Self::Conformal { base, factor } => {
                let inner = base.speed_jet(x, v);
                let (lambda, dlambda) = factor.value_and_gradient(x);
                let root = lambda.sqrt();
                SpeedJet {
                    value: root * inner.value,
                    dx: inner.dx * root + dlambda * (inner.value / (2.0 * root)),
                    dv: inner.dv * root,
                }
            }
        }
    }

    /// True when no coefficient depends on the base point.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            Self::Riemannian(g) => g.is_constant(),
            Self::Randers { base, beta } => base.is_constant() && beta.iter().all(ConformalFactor::is_constant),
            Self::Conformal { base, factor } => factor.is_constant() && base.is_homogeneous(),
        }
    }
}

fn riemannian_jet(g: &RiemannianField, x: &Point, v: &Vector2<f64>) -> SpeedJet {
    let (m, mx, my) = g.matrix_jet(x);
    let gv = m * v;
    let value = v.dot(&gv).max(0.0).sqrt();
    if value == 0.0 {
        return SpeedJet { value, dx: Vector2::zeros(), dv: Vector2::zeros() };
    }
    SpeedJet {
        value,
        dx: Vector2::new(v.dot(&(mx * v)), v.dot(&(my * v))) / (2.0 * value),
        dv: gv / value,
    }
}

/// The fixed Euclidean reference metric `g` on the torus.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReferenceMetric;

impl ReferenceMetric {
    pub fn norm(&self, v: &Vector2<f64>) -> f64 {
        v.norm()
    }
}

/// Outcome of the sampled strict-convexity check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    pub worst_point: Point,
    pub worst_direction: Vector2<f64>,
    pub passed: bool,
}

/// Central-difference Hessian of `v -> F^2(x, v)` with step `h`.
pub fn fiber_hessian(metric: &FinslerMetric, x: &Point, v: &Vector2<f64>, h: f64) -> Matrix2<f64> {
    let f2 = |w: Vector2<f64>| metric.speed(x, &w).powi(2);
    let e = [Vector2::new(h, 0.0), Vector2::new(0.0, h)];
    let mut hess = Matrix2::zeros();
    for a in 0..2 {
        for b in a..2 {
            let val = (f2(v + e[a] + e[b]) - f2(v + e[a] - e[b]) - f2(v - e[a] + e[b]) + f2(v - e[a] - e[b]))
                / (4.0 * h * h);
            hess[(a, b)] = val;
            hess[(b, a)] = val;
        }
    }
    hess
}

fn min_symmetric_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    mean - half_diff.hypot(m[(0, 1)])
}

/// Samples random base points and unit directions and reports the smallest
/// eigenvalue of the fiberwise Hessian of `F^2`.
pub fn verify_convexity(metric: &FinslerMetric, sample_count: usize, seed: u64) -> Result<ConvexityReport> {
    if sample_count == 0 {
        return Err(Error::InputDomain("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConvexityReport {
        min_eigenvalue: f64::INFINITY,
        worst_point: Point::zeros(),
        worst_direction: Vector2::zeros(),
        passed: false,
    };
    for _ in 0..sample_count {
        let x = Point::new(rng.random(), rng.random());
        let angle: f64 = rng.random::<f64>() * TAU;
        let v = Vector2::new(angle.cos(), angle.sin());
        let eig = min_symmetric_eigenvalue(&fiber_hessian(metric, &x, &v, 1e-4 * v.norm()));
        if eig < report.min_eigenvalue {
            report.min_eigenvalue = eig;
            report.worst_point = x;
            report.worst_direction = v;
        }
    }
    report.passed = report.min_eigenvalue > CONVEXITY_TOLERANCE;
    Ok(report)
}

/// Smallest sampled `c >= 1` with `F / c <= |v| <= c F`, times
/// [`COMPARISON_INFLATION`].
pub fn comparison_constant(metric: &FinslerMetric, reference: &ReferenceMetric, grid_resolution: usize) -> Result<f64> {
    if grid_resolution < 8 {
        return Err(Error::InputDomain(format!("grid resolution {grid_resolution} < 8")));
    }
    let points = if metric.is_homogeneous() { 1 } else { grid_resolution };
    let directions = 8 * grid_resolution;
    let mut worst = 1.0_f64;
    for i in 0..points {
        for j in 0..points {
            let x = Point::new(i as f64 / points as f64, j as f64 / points as f64);
            for k in 0..directions {
                let angle = TAU * k as f64 / directions as f64;
                let v = Vector2::new(angle.cos(), angle.sin());
                let f = metric.speed(&x, &v);
                let r = reference.norm(&v);
                if !(f > 1e-12 * r) {
                    return Err(Error::InvalidMetric(format!(
                        "F({}, {}; {:.4}) = {f} is degenerate",
                        x.x, x.y, angle
                    )));
                }
                worst = worst.max(f / r).max(r / f);
            }
        }
    }
    Ok(worst * COMPARISON_INFLATION)
}
