use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("{0}")]
    Domain(String),

    #[error("no sign change: {0}")]
    NoSignChange(String),

    #[error("root finder did not converge within {0} iterations")]
    IterationCap(usize),

    /// No candidate integration bound met the tolerance. `curve` holds the
    /// `(L, max_ae)` audit for every candidate that was tried.
    #[error("no candidate bound satisfies max AE <= {tol:e}")]
    NoBoundFound { tol: f64, curve: Vec<(f64, f64)> },

    #[error("degenerate location set: {0}")]
    Degenerate(String),

    #[error("duplicate location at rows {first} and {second}")]
    DuplicateLocation { first: usize, second: usize },

    #[error("cholesky factorization failed: non-positive pivot at index {0}")]
    NotPositiveDefinite(usize),

    #[error("failed to allocate {0} bytes")]
    Allocation(usize),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}
