//! Shortest closed Finsler geodesics on the flat torus and the finite-dimensional
//! argmin machinery that makes them unique under conformal perturbation.
//!
//! - [`fourier`]: truncated Fourier series, used for coefficient fields and
//!   conformal factors.
//! - [`metric`]: Riemannian, Randers and conformally scaled Finsler metrics.
//! - [`loops`]: discrete loops, length, action and loop measures.
//! - [`solver`]: action minimization in a homotopy class, multi-start
//!   minimizer sets.
//! - [`mane`]: argmin sets of linear functionals over polytopes and the
//!   perturbation that shrinks them.
//! - [`bridge`]: the `F^2`-weighted pushforward to grid measures on the torus.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod fourier;
pub mod loops;
pub mod mane;
pub mod metric;
pub mod solver;

pub use error::{Error, Result};
pub use fourier::{ConformalFactor, FourierMode};
pub use loops::{DiscreteLoop, LoopMeasure, Winding};
pub use metric::{FinslerMetric, Point, ReferenceMetric, RiemannianField};
