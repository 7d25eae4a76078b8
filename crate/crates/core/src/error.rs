use thiserror::Error;

/// Errors raised by the model, the schedulers and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("topology has no links")]
    EmptyTopology,

    #[error(
        "noise assumption violated on link {link}: beta*N*l^alpha/P = {ratio} (must be <= 1/2)"
    )]
    AssumptionViolated { link: usize, ratio: f64 },

    #[error("link set is not feasible")]
    InfeasibleInput,

    #[error("stability classification needs at least 4 checkpoints, got {0}")]
    TooFewCheckpoints(usize),

    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
