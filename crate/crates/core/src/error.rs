use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("arm {arm} out of range for a model with {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("horizon exceeded: cannot run step {step} with horizon {horizon}")]
    HorizonExceeded { step: u64, horizon: u64 },

    #[error("regime not applicable: {0}")]
    RegimeNotApplicable(String),

    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    /// Schema or validation failure in an experiment file; `path` is the
    /// dotted location of the offending field.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's input rather than by execution.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::Dimension(_)
                | Error::InvalidExperiment(_)
                | Error::Config { .. }
                | Error::RegimeNotApplicable(_)
        )
    }
}
