use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mode layout: {0}")]
    InvalidLayout(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("layout mismatch between state and transform")]
    LayoutMismatch,

    #[error("matrix is not symplectic (max |M K M^dag - K| = {residual:e})")]
    NotSymplectic { residual: f64 },

    #[error("passive channel is not contractive (largest singular value {max_singular_value})")]
    NotContractive { max_singular_value: f64 },

    #[error("invalid spatial mode selection: {0}")]
    InvalidModes(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("{what} limit exceeded: {requested} > {limit}")]
    LimitExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("malformed data: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
