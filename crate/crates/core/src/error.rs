use crate::trace::Trace;

/// Errors raised by kernels, drivers, diagnostics and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("initial state is outside the support: {0}")]
    ChainInit(String),

    #[error("shrinkage did not accept within {0} proposals")]
    ShrinkageLimit(usize),

    #[error("sampling aborted at iteration {iteration}: {source}")]
    SamplingAbort {
        iteration: usize,
        #[source]
        source: Box<Error>,
        partial: Box<Trace>,
    },

    #[error("diagnostics failed: {0}")]
    Diagnostics(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Io(_) | Error::Csv(_) => 2,
            Error::Diagnostics(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
