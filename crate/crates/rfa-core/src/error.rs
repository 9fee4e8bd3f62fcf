use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported target: {0}")]
    Unsupported(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure.
    /// The CLI maps these to exit code 1, everything else to 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::ConfigParse(_) | Error::InvalidDimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
