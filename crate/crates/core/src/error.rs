use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },

    #[error("unsupported mode: {0}")]
    Unsupported(String),

    #[error("step size too large: trace deviated by {0:e} before renormalization")]
    StepSize(f64),

    #[error("estimator diverged at t = {0}")]
    EstimatorDivergence(f64),

    #[error("controller contract violated: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("uncontrollable regime: beta = {0} >= 1")]
    Uncontrollable(f64),

    #[error("run invalid: {failed} of {total} trajectories failed")]
    RunInvalid { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
