use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("exit-time sampler did not converge (u = {u}) after {iterations} iterations")]
    SamplerFailure { u: f64, iterations: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("non-finite {what} at stage {stage}")]
    NonFinite { stage: usize, what: &'static str },

    #[error("exact tree with {stages} stages exceeds the limit of {limit}")]
    TreeTooLarge { stages: usize, limit: usize },

    #[error("fine path exhausted after {found} of {requested} crossings")]
    CouplingExhausted { found: usize, requested: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
