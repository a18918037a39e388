use std::process::ExitCode;

use pdsplit::pdsolve::AdmissibilityReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameters are not admissible\n{0}")]
    Inadmissible(Box<AdmissibilityReport>),

    #[error("iterates diverged at iteration {0}")]
    Divergence(usize),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Inadmissible(_) => 3,
            CliError::Divergence(_) => 4,
        })
    }
}

impl From<pdsplit::Error> for CliError {
    fn from(e: pdsplit::Error) -> Self {
        use pdsplit::Error as E;
        match e {
            E::Inadmissible(r) => CliError::Inadmissible(r),
            E::Divergence { iteration } => CliError::Divergence(iteration),
            E::Io(e) => CliError::Io(e.to_string()),
            E::Format(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
