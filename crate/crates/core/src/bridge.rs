//! Grid measures on the torus and the `F^2`-weighted pushforward of loop
//! measures onto them.
//!
//! Cell `(row, col)` covers `[col/m, (col+1)/m) x [row/m, (row+1)/m)`; weights
//! are stored row-major, so rows run along `y`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fourier::ConformalFactor;
use crate::loops::{action, loop_measure, DiscreteLoop, LoopMeasure};
use crate::metric::{FinslerMetric, Point};

pub const MIN_RESOLUTION: usize = 8;
pub const DEFAULT_RESOLUTION: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    resolution: usize,
    weights: Vec<f64>,
}

impl GridMeasure {
    pub fn zeros(resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self { resolution, weights: vec![0.0; resolution * resolution] })
    }

    /// Row-major weights; all must be finite and nonnegative.
    pub fn from_weights(resolution: usize, weights: Vec<f64>) -> Result<Self> {
        check_resolution(resolution)?;
        if weights.len() != resolution * resolution {
            return Err(Error::InputDomain(format!("expected {} weights, got {}", resolution * resolution, weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InputDomain(format!("grid weight {w} is not a nonnegative real")));
        }
        Ok(Self { resolution, weights })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.resolution + col]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `(row, col)` of the cell containing `x` (taken mod 1).
    pub fn cell_of(&self, x: &Point) -> (usize, usize) {
        let m = self.resolution;
        let index = |c: f64| ((c.rem_euclid(1.0) * m as f64).floor() as usize).min(m - 1);
        (index(x.y), index(x.x))
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        let h = 1.0 / self.resolution as f64;
        Point::new((col as f64 + 0.5) * h, (row as f64 + 0.5) * h)
    }

    /// Header line `# resolution=m total_mass=M`, then `m` rows of `m` weights.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# resolution={} total_mass={:e}\n", self.resolution, self.total_mass());
        for row in self.weights.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:e}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut weights = Vec::new();
        let mut rows = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            for cell in line.split(',') {
                weights.push(cell.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{cell:?}: {e}")))?);
            }
            rows += 1;
        }
        if rows * rows != weights.len() {
            return Err(Error::Parse(format!("{rows} rows holding {} weights is not a square grid", weights.len())));
        }
        Self::from_weights(rows, weights)
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InputDomain(format!("resolution {resolution} below {MIN_RESOLUTION}")));
    }
    Ok(())
}

/// `pi_*^F mu`: each sample deposits `weight * F^2(x, v)` into the cell of `x`.
pub fn pushforward(metric: &FinslerMetric, mu: &LoopMeasure, resolution: usize) -> Result<GridMeasure> {
    let mut grid = GridMeasure::zeros(resolution)?;
    for s in mu.samples() {
        let (row, col) = grid.cell_of(&s.point);
        grid.weights[row * resolution + col] += s.weight * metric.speed(&s.point, &s.velocity).powi(2);
    }
    Ok(grid)
}

/// `sum lambda(cell center) * weight`.
pub fn pairing(lambda: &ConformalFactor, mu: &GridMeasure) -> f64 {
    let m = mu.resolution;
    let mut total = 0.0;
    for row in 0..m {
        for col in 0..m {
            let w = mu.weight(row, col);
            if w != 0.0 {
                total += lambda.value(&mu.cell_center(row, col)) * w;
            }
        }
    }
    total
}

/// Gap between the action of `loop` under `sqrt(lambda) F` and the pairing of
/// `lambda` with the pushforward of its loop measure.
pub fn action_consistency(metric: &FinslerMetric, lambda: &ConformalFactor, curve: &DiscreteLoop, resolution: usize) -> Result<f64> {
    let scaled = metric.conformal_scale(lambda)?;
    let grid = pushforward(metric, &loop_measure(curve, f64::INFINITY)?, resolution)?;
    Ok((action(&scaled, curve) - pairing(lambda, &grid)).abs())
}

/// Upper bound for [`action_consistency`]: segment midpoints sit within half a
/// cell diagonal of the center they are paired with.
pub fn consistency_bound(lambda: &ConformalFactor, resolution: usize, total_mass: f64) -> f64 {
    lambda.lipschitz_bound() * std::f64::consts::SQRT_2 / resolution as f64 * total_mass
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Separation {
    Equal,
    /// First cell in row-major order whose weights differ beyond tolerance.
    Distinguished { row: usize, col: usize, difference: f64 },
}

/// Compares two grid measures cell by cell with tolerance `tol (1 + max mass)`.
pub fn separation_test(a: &GridMeasure, b: &GridMeasure, tol: f64) -> Result<Separation> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch(a.resolution, b.resolution));
    }
    let threshold = tol * (1.0 + a.max_mass().max(b.max_mass()));
    let m = a.resolution;
    for (i, (wa, wb)) in a.weights.iter().zip(&b.weights).enumerate() {
        let difference = wa - wb;
        if difference.abs() > threshold {
            return Ok(Separation::Distinguished { row: i / m, col: i % m, difference });
        }
    }
    Ok(Separation::Equal)
}
