//! Truncated Fourier series on the flat torus `R^2 / Z^2`.
//!
//! A [`ConformalFactor`] is a finite trigonometric sum
//!
//! ```text
//! f(x, y) = offset + sum_k [ c_k cos(2 pi (kx x + ky y)) + s_k sin(2 pi (kx x + ky y)) ]
//! ```
//!
//! Every partial derivative is again a trigonometric sum, so derivatives of any
//! order are evaluated exactly. The same type carries plain smooth functions
//! (no sign condition) and positive conformal factors; positivity is checked on
//! demand with [`ConformalFactor::check_positive`].

use std::f64::consts::TAU;

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// One Fourier mode `cos * cos(2 pi k.x) + sin * sin(2 pi k.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMode {
    pub kx: i32,
    pub ky: i32,
    pub cos: f64,
    pub sin: f64,
}

impl FourierMode {
    pub fn new(kx: i32, ky: i32, cos: f64, sin: f64) -> Self {
        Self { kx, ky, cos, sin }
    }

    fn phase(&self, x: &Vector2<f64>) -> f64 {
        TAU * (f64::from(self.kx) * x.x + f64::from(self.ky) * x.y)
    }

    fn frequency(&self) -> f64 {
        TAU * f64::from(self.kx).hypot(f64::from(self.ky))
    }
}

/// A real trigonometric polynomial on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalFactor {
    offset: f64,
    modes: Vec<FourierMode>,
}

/// Minimum resolution of the grid used for positivity and sup-norm checks.
pub const VERIFY_GRID: usize = 128;

impl ConformalFactor {
    /// Builds a series from an offset and a list of modes. Modes are brought to
    /// canonical form: `k` and `-k` are merged, the zero mode is folded into the
    /// offset and vanishing modes are dropped.
    pub fn new(offset: f64, modes: impl IntoIterator<Item = FourierMode>) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InputDomain(format!("offset {offset} is not finite")));
        }
        let mut out = Self { offset, modes: Vec::new() };
        for mode in modes {
            if !mode.cos.is_finite() || !mode.sin.is_finite() {
                return Err(Error::InputDomain(format!(
                    "mode ({}, {}) has non-finite coefficients",
                    mode.kx, mode.ky
                )));
            }
            out.accumulate(mode);
        }
        out.prune();
        Ok(out)
    }

    pub fn constant(value: f64) -> Self {
        Self { offset: value, modes: Vec::new() }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn is_constant(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest `|kx|` or `|ky|` among the modes.
    pub fn max_mode(&self) -> i32 {
        self.modes
            .iter()
            .map(|m| m.kx.abs().max(m.ky.abs()))
            .max()
            .unwrap_or(0)
    }

    fn accumulate(&mut self, mode: FourierMode) {
        let (mut kx, mut ky, cos, mut sin) = (mode.kx, mode.ky, mode.cos, mode.sin);
        if kx == 0 && ky == 0 {
            self.offset += cos;
            return;
        }
        if kx < 0 || (kx == 0 && ky < 0) {
            kx = -kx;
            ky = -ky;
            sin = -sin;
        }
        match self.modes.iter_mut().find(|m| m.kx == kx && m.ky == ky) {
            Some(existing) => {
                existing.cos += cos;
                existing.sin += sin;
            }
            None => self.modes.push(FourierMode { kx, ky, cos, sin }),
        }
    }

    fn prune(&mut self) {
        self.modes.retain(|m| m.cos != 0.0 || m.sin != 0.0);
        self.modes.sort_by_key(|m| (m.kx, m.ky));
    }

    pub fn value(&self, x: &Vector2<f64>) -> f64 {
        self.modes.iter().fold(self.offset, |acc, m| {
            let (s, c) = m.phase(x).sin_cos();
            acc + m.cos * c + m.sin * s
        })
    }

    pub fn value_and_gradient(&self, x: &Vector2<f64>) -> (f64, Vector2<f64>) {
        let mut value = self.offset;
        let mut grad = Vector2::zeros();
        for m in &self.modes {
            let (s, c) = m.phase(x).sin_cos();
            value += m.cos * c + m.sin * s;
            let d = TAU * (m.sin * c - m.cos * s);
            grad.x += d * f64::from(m.kx);
            grad.y += d * f64::from(m.ky);
        }
        (value, grad)
    }

    /// Mixed partial derivative `d^a/dx^a d^b/dy^b`, evaluated exactly.
    pub fn derivative(&self, x: &Vector2<f64>, a: u32, b: u32) -> f64 {
        let order = a + b;
        if order == 0 {
            return self.value(x);
        }
        self.modes.iter().fold(0.0, |acc, m| {
            let scale = (TAU * f64::from(m.kx)).powi(a as i32) * (TAU * f64::from(m.ky)).powi(b as i32);
            if scale == 0.0 {
                return acc;
            }
            let (s, c) = m.phase(x).sin_cos();
            // (cos, sin) of the phase shifted by order * pi / 2
            let (cs, ss) = match order % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            acc + scale * (m.cos * cs + m.sin * ss)
        })
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut out = Self { offset: a * self.offset + b * other.offset, modes: Vec::new() };
        for m in &self.modes {
            out.accumulate(FourierMode { cos: a * m.cos, sin: a * m.sin, ..*m });
        }
        for m in &other.modes {
            out.accumulate(FourierMode { cos: b * m.cos, sin: b * m.sin, ..*m });
        }
        out.prune();
        out
    }

    /// Pointwise product, expanded with the product-to-sum identities.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = Self { offset: self.offset * other.offset, modes: Vec::new() };
        for m in &self.modes {
            out.accumulate(FourierMode { cos: m.cos * other.offset, sin: m.sin * other.offset, ..*m });
        }
        for m in &other.modes {
            out.accumulate(FourierMode { cos: m.cos * self.offset, sin: m.sin * self.offset, ..*m });
        }
        for p in &self.modes {
            for q in &other.modes {
                let (sx, sy) = (p.kx + q.kx, p.ky + q.ky);
                let (dx, dy) = (p.kx - q.kx, p.ky - q.ky);
                // cos A cos B, sin A sin B, sin A cos B, cos A sin B
                out.accumulate(FourierMode::new(dx, dy, 0.5 * (p.cos * q.cos + p.sin * q.sin), 0.5 * (p.sin * q.cos - p.cos * q.sin)));
                out.accumulate(FourierMode::new(sx, sy, 0.5 * (p.cos * q.cos - p.sin * q.sin), 0.5 * (p.sin * q.cos + p.cos * q.sin)));
            }
        }
        out.prune();
        out
    }

    /// Upper bound on the Lipschitz constant, `sum 2 pi |k| sqrt(c^2 + s^2)`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency() * m.cos.hypot(m.sin)).sum()
    }

    fn grid_resolution(&self) -> usize {
        VERIFY_GRID.max(16 * self.max_mode() as usize)
    }

    /// Minimum over the verification grid together with its location.
    pub fn grid_minimum(&self) -> (f64, Vector2<f64>) {
        let res = self.grid_resolution();
        let mut best = (f64::INFINITY, Vector2::zeros());
        for i in 0..res {
            for j in 0..res {
                let p = Vector2::new(i as f64 / res as f64, j as f64 / res as f64);
                let v = self.value(&p);
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
        best
    }

    /// Membership in the positive cone: `f > 0` on the verification grid.
    pub fn check_positive(&self) -> Result<()> {
        let (min, at) = self.grid_minimum();
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::NotConformalFactor { min, x: at.x, y: at.y })
        }
    }

    /// Grid maxima of `|d^alpha f|` grouped by derivative order `0..=k_max`.
    fn order_maxima(&self, k_max: u32) -> Vec<f64> {
        let res = self.grid_resolution();
        let mut maxima = vec![0.0_f64; k_max as usize + 1];
        let mut phases = vec![(0.0, 0.0); self.modes.len()];
        for i in 0..res {
            for j in 0..res {
                let p = Vector2::new(i as f64 / res as f64, j as f64 / res as f64);
                for (slot, m) in phases.iter_mut().zip(&self.modes) {
                    *slot = m.phase(&p).sin_cos();
                }
                maxima[0] = maxima[0].max(self.value(&p).abs());
                for order in 1..=k_max {
                    for a in 0..=order {
                        let b = order - a;
                        let mut d = 0.0;
                        for (m, &(s, c)) in self.modes.iter().zip(&phases) {
                            let scale = (TAU * f64::from(m.kx)).powi(a as i32)
                                * (TAU * f64::from(m.ky)).powi(b as i32);
                            let (cs, ss) = match order % 4 {
                                0 => (c, s),
                                1 => (-s, c),
                                2 => (-c, -s),
                                _ => (s, -c),
                            };
                            d += scale * (m.cos * cs + m.sin * ss);
                        }
                        let slot = &mut maxima[order as usize];
                        *slot = slot.max(d.abs());
                    }
                }
            }
        }
        maxima
    }

    /// `C^k` norms for `k = 0..=k_max`: the grid max of all partial derivatives
    /// of order at most `k`.
    pub fn ck_norms(&self, k_max: u32) -> Vec<f64> {
        let mut norms = self.order_maxima(k_max);
        for k in 1..norms.len() {
            norms[k] = norms[k].max(norms[k - 1]);
        }
        norms
    }
}

/// Default number of `C^k` terms kept in [`seminorm_distance`].
pub const DEFAULT_K_MAX: u32 = 8;

/// Truncation of the Frechet metric `sum_k 2^-k |f-g|_k / (1 + |f-g|_k)` on smooth
/// functions, using `C^k` norms up to `k_max`.
pub fn seminorm_distance(f: &ConformalFactor, g: &ConformalFactor, k_max: u32) -> f64 {
    let diff = f.combine(1.0, g, -1.0);
    if diff.offset == 0.0 && diff.modes.is_empty() {
        return 0.0;
    }
    diff.ck_norms(k_max)
        .iter()
        .enumerate()
        .map(|(k, &n)| 0.5_f64.powi(k as i32) * n / (1.0 + n))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos2_bump() -> ConformalFactor {
        // 1 + 0.5 cos^2(2 pi y) = 1.25 + 0.25 cos(4 pi y)
        ConformalFactor::new(1.25, [FourierMode::new(0, 2, 0.25, 0.0)]).unwrap()
    }

    #[test]
    fn canonical_form_merges_opposite_modes() {
        let f = ConformalFactor::new(
            0.0,
            [FourierMode::new(1, 0, 1.0, 2.0), FourierMode::new(-1, 0, 1.0, 2.0), FourierMode::new(0, 0, 3.0, 9.0)],
        )
        .unwrap();
        assert_eq!(f.offset(), 3.0);
        assert_eq!(f.modes(), &[FourierMode::new(1, 0, 2.0, 0.0)]);
    }

    #[test]
    fn value_matches_closed_form() {
        let f = cos2_bump();
        for &y in &[0.0, 0.1, 0.25, 0.6] {
            let p = Vector2::new(0.3, y);
            let expect = 1.0 + 0.5 * (TAU * y).cos().powi(2);
            assert!((f.value(&p) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = ConformalFactor::new(0.5, [FourierMode::new(1, 2, 0.3, -0.2), FourierMode::new(0, 1, 0.1, 0.4)]).unwrap();
        let p = Vector2::new(0.17, 0.61);
        let h = 1e-5;
        let dx = (f.value(&(p + Vector2::new(h, 0.0))) - f.value(&(p - Vector2::new(h, 0.0)))) / (2.0 * h);
        let dy = (f.value(&(p + Vector2::new(0.0, h))) - f.value(&(p - Vector2::new(0.0, h)))) / (2.0 * h);
        let (_, grad) = f.value_and_gradient(&p);
        assert!((grad.x - dx).abs() < 1e-7 && (grad.y - dy).abs() < 1e-7);
        assert!((f.derivative(&p, 1, 0) - dx).abs() < 1e-7);
        assert!((f.derivative(&p, 0, 1) - dy).abs() < 1e-7);
        let dxy = (f.derivative(&(p + Vector2::new(0.0, h)), 1, 0) - f.derivative(&(p - Vector2::new(0.0, h)), 1, 0)) / (2.0 * h);
        assert!((f.derivative(&p, 1, 1) - dxy).abs() < 1e-5);
        let dyyy = (f.derivative(&(p + Vector2::new(0.0, h)), 0, 2) - f.derivative(&(p - Vector2::new(0.0, h)), 0, 2)) / (2.0 * h);
        assert!((f.derivative(&p, 0, 3) - dyyy).abs() < 1e-3);
    }

    #[test]
    fn product_is_pointwise() {
        let f = cos2_bump();
        let g = ConformalFactor::new(2.0, [FourierMode::new(1, -1, 0.2, 0.7), FourierMode::new(0, 2, -0.1, 0.05)]).unwrap();
        let fg = f.product(&g);
        for i in 0..20 {
            let p = Vector2::new(0.037 * i as f64, 0.11 * i as f64);
            assert!((fg.value(&p) - f.value(&p) * g.value(&p)).abs() < 1e-13);
        }
    }

    #[test]
    fn positivity_check() {
        assert!(cos2_bump().check_positive().is_ok());
        let bad = ConformalFactor::new(0.1, [FourierMode::new(1, 0, 0.5, 0.0)]).unwrap();
        assert!(matches!(bad.check_positive(), Err(Error::NotConformalFactor { .. })));
        assert!(ConformalFactor::constant(0.0).check_positive().is_err());
    }

    #[test]
    fn seminorm_identity_and_bound() {
        let f = cos2_bump();
        assert_eq!(seminorm_distance(&f, &f, DEFAULT_K_MAX), 0.0);
        let g = ConformalFactor::new(-3.0, [FourierMode::new(3, 1, 5.0, 0.0)]).unwrap();
        assert!(seminorm_distance(&f, &g, 40) < 2.0);
    }

    #[test]
    fn seminorm_of_constant_difference() {
        let delta = 0.37;
        let f = cos2_bump();
        let g = f.combine(1.0, &ConformalFactor::constant(delta), -1.0);
        for k_max in [0_u32, 3, 8] {
            // direct summation of the defining series
            let mut expect = 0.0;
            for k in 0..=k_max {
                expect += 0.5_f64.powi(k as i32) * delta / (1.0 + delta);
            }
            assert!((seminorm_distance(&f, &g, k_max) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lipschitz_bound_dominates_gradient() {
        let f = ConformalFactor::new(1.0, [FourierMode::new(2, 1, 0.3, 0.1), FourierMode::new(0, 1, -0.2, 0.4)]).unwrap();
        let lip = f.lipschitz_bound();
        for i in 0..200 {
            let p = Vector2::new((i as f64 * 0.618) % 1.0, (i as f64 * 0.377) % 1.0);
            assert!(f.value_and_gradient(&p).1.norm() <= lip);
        }
    }
}
