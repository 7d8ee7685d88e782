use thiserror::Error;

/// Errors produced anywhere in the GLRR pipeline.
#[derive(Debug, Error)]
pub enum GlrrError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure in {routine}: {detail}")]
    NumericalFailure {
        routine: &'static str,
        detail: String,
    },

    #[error("solver diverged at iteration {iteration}: non-finite iterate")]
    Divergence { iteration: usize },

    #[error("SVR solver did not converge after {iterations} updates (max KKT violation {max_violation:e})")]
    SvrNonConvergence {
        iterations: usize,
        max_violation: f64,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GlrrError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GlrrError::InvalidInput(msg.into())
    }

    /// True for failures caused by bad data or schema, as opposed to numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            GlrrError::InvalidInput(_)
                | GlrrError::MissingColumn(_)
                | GlrrError::Csv(_)
                | GlrrError::Config(_)
                | GlrrError::Io(_)
                | GlrrError::Json(_)
        )
    }
}

pub type Result<T, E = GlrrError> = std::result::Result<T, E>;
