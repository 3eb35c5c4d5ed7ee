use thiserror::Error;

/// Library-wide error type.
///
/// Variants split into two broad classes that the CLI maps onto exit codes:
/// input/validation problems (bad parameters, size caps, degenerate models)
/// and runtime capability problems (unsupported method for a model, missing
/// auxiliary inputs, tilting outside the MGF domain).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("size limit exceeded: {0}")]
    TooLarge(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("missing input `{what}`; produce it with `{produced_by}`")]
    MissingInput { what: String, produced_by: String },

    #[error("Orlicz norm diverges: {0}")]
    Divergent(String),

    #[error("range error: {0}")]
    Range(String),
}

impl Error {
    /// True for errors that indicate bad inputs rather than a capability gap.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Validation(_) | Error::TooLarge(_) | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
