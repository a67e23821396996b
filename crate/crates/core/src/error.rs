use thiserror::Error;

/// Errors raised by grid assembly, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite samples in input")]
    NonFinite,

    #[error("parameter validation failed: {0}")]
    Validation(String),

    #[error("not in Nehari cone: {0}")]
    NotInNehariCone(String),

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("tangent unreliable near degeneracy (condition estimate {0:.3e})")]
    TangentUnreliable(f64),

    #[error("E unbounded below on S_c: {0}")]
    Unbounded(String),

    #[error("eigensolve failed: {0}")]
    Eigensolve(String),

    #[error("ball only: {0}")]
    BallOnly(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

pub(crate) fn check_finite(samples: &[f64]) -> Result<()> {
    if samples.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
