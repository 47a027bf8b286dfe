use std::path::PathBuf;

/// Errors raised by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("point outside the surface domain")]
    OutsideDomain,
    #[error("owner mismatch: {0}")]
    OwnerMismatch(String),
    #[error("truncation J = {j} too small: tail bound {tail:.3e} exceeds tolerance {tol:.3e}")]
    Truncation { j: usize, tail: f64, tol: f64 },
    #[error("decay model too weak: {0}")]
    DivergentTail(String),
    #[error("grid rule violated: {0}")]
    GridRule(String),
    #[error("margin violated: {0}")]
    Margin(String),
    #[error("zero norm: {0}")]
    ZeroNorm(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
