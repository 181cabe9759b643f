use trapforge_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    NoTrap(String),
    #[error("{0}")]
    IonLost(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoTrap(_) => 3,
            CliError::IonLost(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let text = e.to_string();
        match e {
            Error::NoTrappingPoint { .. } | Error::NoEscapePoint => CliError::NoTrap(text),
            Error::IonLost { .. } | Error::IonsCoincide { .. } => CliError::IonLost(text),
            Error::InvalidParameter { .. } => CliError::Config(text),
            _ => CliError::Numerical(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numerical(format!("csv: {e}"))
    }
}
