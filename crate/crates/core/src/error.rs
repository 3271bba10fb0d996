use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The Poisson right-hand side carries a mean component, so the Neumann
    /// problem has no solution. Usually a flux assembly bug.
    #[error("incompatible Neumann right-hand side: |DC| = {dc:.3e} exceeds {tolerance:.1e} x ||b|| = {norm:.3e}")]
    Incompatible { dc: f64, norm: f64, tolerance: f64 },

    #[error("empty mesh: {0}")]
    EmptyMesh(&'static str),

    #[error("stitching defect: {unmatched} unmatched seam edges (threshold {threshold})")]
    SeamDefect { unmatched: usize, threshold: usize },

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}
