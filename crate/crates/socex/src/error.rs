use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or inconsistent configuration: exit code 2.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] socex_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io { .. } => ExitCode::from(2),
            CliError::Core(e) if is_config_error(e) => ExitCode::from(2),
            CliError::Core(_) => ExitCode::from(1),
        }
    }
}

/// Core errors that mean the scenario itself is unusable.
fn is_config_error(e: &socex_core::Error) -> bool {
    use socex_core::Error::*;
    matches!(
        e,
        InvalidDistribution(_) | InvalidScenario(_) | InfeasibleParams(_) | PriorOrderViolation { .. } | SelfLoop(_)
    )
}
