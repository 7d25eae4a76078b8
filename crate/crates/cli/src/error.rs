use thiserror::Error;

/// Failure of a CLI command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Simulation(_) => 2,
            Self::Verification(_) => 3,
        }
    }
}

impl From<sinrsim_core::Error> for CliError {
    fn from(e: sinrsim_core::Error) -> Self {
        match e {
            sinrsim_core::Error::ConfigInvalid(msg) => Self::Config(msg),
            other => Self::Simulation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Simulation(format!("i/o: {e}"))
    }
}
