use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A data file failed to load or validate; carries the 1-based line
    /// number when one is known.
    #[error("{path}:{line}: {message}")]
    Data {
        path: String,
        line: u64,
        message: String,
    },

    /// The witness perturbation does not exist (zero runner-up mass).
    #[error("no witness: {0}")]
    NoWitness(String),

    /// No perturbation with finite dissimilarity can flip the prediction.
    #[error("no flip possible: {0}")]
    NoFlipPossible(String),

    /// Stratified fold assignment could not place every class in every fold.
    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// A data-file error at a known location (`line` 0 when unknown).
    pub fn data(path: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::InvalidInput(format!("csv: {other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
