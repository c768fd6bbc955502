use thiserror::Error;

use crate::linalg::KernelCertificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integer overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("precision exhausted: {guard_digits} guard digits cannot resolve n = {n} to 1e-30")]
    PrecisionExhausted { guard_digits: u32, n: u64 },

    #[error("theta is rational within working precision (dist(n*theta, Z) vanishes at n = {n})")]
    DegenerateTheta { n: u64 },

    #[error("gramian is singular on the truncation (lambda_min/lambda_max = {:.3e})", .0.ratio())]
    GramianSingular(Box<KernelCertificate>),

    #[error("eigen-solver failure: {0}")]
    EigenFailure(String),

    #[error("step size too large: dt * (max|omega| + |gain|) = {0:.4} >= 0.1")]
    StepSize(f64),
}
