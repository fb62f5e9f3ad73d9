use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is not on {space}: residual {residual:e}")]
    NotMember { space: &'static str, residual: f64 },
    #[error("invalid group element: {0}")]
    InvalidGroupElement(String),
    #[error("unstable point: q vanishes")]
    UnstablePoint,
    #[error("level mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: Complex64, found: Complex64 },
    #[error("{id} does not act on a {found}")]
    DomainMismatch { id: String, found: &'static str },
    #[error("map is singular (smallest singular value {0:e})")]
    SingularMap(f64),
    #[error("no level-set lift found (residual {0:e})")]
    LiftFailed(f64),
    #[error("projection onto the fixed set did not converge (residual {0:e})")]
    ProjectionFailed(f64),
    #[error("radicand {radicand:e} below the singular tolerance")]
    Singularity { radicand: f64, location: [Complex64; 6] },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("continuation stalled after {steps} steps at (J, H) = ({j}, {h})")]
    ContinuationStall { steps: usize, j: f64, h: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot write {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
