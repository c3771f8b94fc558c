use thiserror::Error;

/// Errors raised by the geometry, solver and argmin machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input outside the admissible domain: {0}")]
    InputDomain(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("not a conformal factor: minimum value {min} at ({x}, {y})")]
    NotConformalFactor { min: f64, x: f64, y: f64 },
    #[error("malformed loop: {0}")]
    MalformedLoop(String),
    #[error("homotopy class ({0}, {1}) is trivial")]
    TrivialClass(i64, i64),
    #[error("degenerate loop: {0}")]
    DegenerateLoop(String),
    #[error("segment {segment} has speed {speed} above the cap {cap}")]
    SpeedCapExceeded { segment: usize, speed: f64, cap: f64 },
    #[error("winding mismatch: ({0}, {1}) vs ({2}, {3})")]
    WindingMismatch(i64, i64, i64, i64),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("exposing direction not found after {0} draws")]
    ConstructionFailure(usize),
    #[error("perturbation failed after {halvings} halvings (last diameter {diameter})")]
    PerturbationFailure { halvings: usize, diameter: f64 },
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
