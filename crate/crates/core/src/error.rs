use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("grid generation failed after {attempts} attempts: {constraint}")]
    Generation { attempts: usize, constraint: String },

    #[error("contract violated: {0}")]
    Contract(String),

    /// A trajectory that does not replay on its grid. `step` is the index of
    /// the first offending step.
    #[error("illegal trajectory at step {step}: {reason}")]
    IllegalTrajectory { step: usize, reason: String },

    #[error("no coordinate pairs found in completion")]
    EmptyOutput,

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
