use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge within {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("degenerate mode {0}: singular value is zero")]
    DegenerateMode(usize),

    #[error("collective timed out: {0}")]
    Timeout(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("connection failure: {0}")]
    Connection(String),

    #[error("format error in {path}: bad magic {found:?}")]
    Format { path: PathBuf, found: Vec<u8> },

    #[error("size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("capacity exceeded: {requested} bytes requested, cap is {cap}")]
    Capacity { requested: u64, cap: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
