use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("frame is not oriented orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),
    #[error("focal radius reached at r = {r} (det A_r = {det:.3e})")]
    Focal { r: f64, det: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("frame field is not adapted (|E3 - d/dr| = {0:.3e})")]
    NotAdapted(f64),
    #[error("frame field is not constant along the foliation (deviation {0:.3e})")]
    NotConstant(f64),
    #[error("sign continuation failed: {0}")]
    SignContinuation(String),
    #[error("convergence diagnostic failed: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
