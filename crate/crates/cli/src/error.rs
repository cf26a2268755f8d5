use mimo_deteq::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 4,
            CliError::Model(e) => match root(e) {
                Error::NonConvergence { .. }
                | Error::Conditioning(_)
                | Error::Consistency(_)
                | Error::Divergence(_) => 3,
                _ => 2,
            },
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Link { source, .. } => root(source),
        other => other,
    }
}
