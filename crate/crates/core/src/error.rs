use thiserror::Error;

/// Errors raised by the quantizer design and evaluation routines.
#[derive(Debug, Error)]
pub enum DoqError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<DoqError>,
    },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },
}

impl DoqError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DoqError::Domain(msg.into())
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        match self {
            e @ DoqError::AtSample { .. } => e,
            e => DoqError::AtSample {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, DoqError>;
