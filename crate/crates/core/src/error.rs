use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised by the grid, kernel, propagator and observable layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Domain(String),

    #[error("snapshot sink failed at step {step}: {source}")]
    Sink {
        step: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
