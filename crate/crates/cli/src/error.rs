use spatial_witness::WitnessError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration and domain errors, 3 for numerical failures, 4 for
    /// resource caps.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Witness(e) => match e {
                WitnessError::Domain(_) | WitnessError::Precondition(_) => 2,
                WitnessError::Resource(_) => 4,
                WitnessError::Numerical(_)
                | WitnessError::Bracket { .. }
                | WitnessError::InconsistentState(_)
                | WitnessError::Resolution(_) => 3,
            },
            CliError::Validation(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
