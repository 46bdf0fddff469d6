use thiserror::Error;

/// Crate-wide error type. The CLI maps [`Error::Validation`] to exit code 2,
/// [`Error::Numerical`] to exit code 3, and usage errors to 64.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: malformed signature, out-of-range parameter, wrong
    /// geometry class, unsupported irrational, …
    #[error("validation: {0}")]
    Validation(String),

    /// Numerical failure: solver non-convergence, collision-audit failure,
    /// eigensolver breakdown, energy inside spectrum, degenerate geometry.
    #[error("numerical: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for this error under the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io(_) => 3,
        }
    }
}
