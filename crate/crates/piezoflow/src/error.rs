use crate::constitutive::AssumptionCertificate;
use thiserror::Error;

/// Crate-wide error type. CLI exit codes are derived from these variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("model failed certification: {violations} sample cell(s) violate the ellipticity lower bound")]
    NotCertifiable {
        violations: usize,
        certificate: Box<AssumptionCertificate>,
    },

    #[error("certificate rejected: {0}")]
    NotCertified(String),

    #[error("pressure iteration stalled: residual {residual:.3e} > tol {tol:.3e} after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("CFL violation: max|v| dt n/L = {cfl:.4} exceeds limit {limit}")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("fields live on different grids ({0})")]
    GridMismatch(&'static str),

    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    #[error("config error: {0}")]
    ConfigGeneral(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("audit failure: {0}")]
    AuditFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
