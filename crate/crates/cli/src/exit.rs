//! Exit-code contract: 0 success, 1 configuration, 2 I/O, 3 collective
//! timeout, 4 connection failure.

use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_TIMEOUT: i32 = 3;
pub const EXIT_CONNECTION: i32 = 4;

/// Error carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(EXIT_IO, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Numerical failures (non-convergence, a zero singular value among the
/// kept modes) count as configuration errors: they mean the requested
/// truncation does not fit the data.
pub fn exit_code(e: &parsvd::Error) -> i32 {
    use parsvd::Error::*;
    match e {
        InvalidArgument(_) | Convergence { .. } | DegenerateMode(_) | Capacity { .. } => {
            EXIT_CONFIG
        }
        Io(_) | Csv(_) | Format { .. } | SizeMismatch { .. } => EXIT_IO,
        Timeout(_) => EXIT_TIMEOUT,
        Connection(_) | Protocol(_) => EXIT_CONNECTION,
    }
}

impl From<parsvd::Error> for CliError {
    fn from(e: parsvd::Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}
