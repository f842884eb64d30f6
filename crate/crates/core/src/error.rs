use thiserror::Error;

use crate::scenario::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario is invalid:\n{0}")]
    InvalidScenario(ValidationReport),

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("increment of {count} task(s) for framework {framework} on server {server} rejected: {reason}")]
    RejectedIncrement {
        framework: usize,
        server: usize,
        count: f64,
        reason: &'static str,
    },

    #[error("framework {framework} is not allowed on server {server}")]
    NotAllowed { framework: usize, server: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("unknown policy label `{0}`")]
    UnknownPolicy(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("at least {needed} samples or trials are required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("log objective is infeasible: framework {framework} is driven to zero allocation")]
    InfeasibleForLog { framework: usize },

    #[error("solver did not converge within {iterations} iterations (best KKT residual {best_residual:e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("undefined: reference allocation of framework {framework} is zero")]
    ZeroReference { framework: usize },

    #[error("enumeration guard exceeded: more than {limit} feasible integer allocations")]
    EnumerationLimit { limit: usize },

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
}
