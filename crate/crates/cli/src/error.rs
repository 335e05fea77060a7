use multigo_core::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Argument parsing failure, already rendered by the parser.
    #[error("{0}")]
    Clap(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(Error::InvalidArgument(_) | Error::UnknownStrategy { .. }) => EXIT_USAGE,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}
