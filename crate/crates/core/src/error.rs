use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("assumption {assumption} violated: {detail}")]
    Assumption { assumption: &'static str, detail: String },

    #[error("iterates diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("construction failed: {0}")]
    Construction(String),
}

impl Error {
    /// Short stable identifier, used by the CLI for machine-parsable error lines.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::NonFinite(_) => "non_finite",
            Error::Precondition(_) => "precondition",
            Error::Numerical(_) => "numerical",
            Error::Overflow(_) => "overflow",
            Error::Assumption { .. } => "assumption",
            Error::Divergence { .. } => "divergence",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Construction(_) => "construction",
        }
    }
}
