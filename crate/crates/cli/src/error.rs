use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rittlab::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 config, 3 capacity, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use rittlab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidParameter { .. } | E::Parse { .. }) => 2,
            CliError::Core(E::Capacity { .. } | E::TailTooLarge { .. }) => 3,
            CliError::Core(E::Numerical(_) | E::Degenerate(_)) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "capacity",
            4 => "numerical",
            _ => "io",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
