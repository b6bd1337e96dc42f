use std::path::Path;
use std::process::ExitCode;

use orka::OrkaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Budget(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Core(OrkaError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn format(msg: String) -> Self {
        CliError::Format(msg)
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 0 success, 2 bad arguments, 3 budget exhausted, 4 I/O failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io { .. } | CliError::Format(_) => 4,
            CliError::Core(e) => match e {
                OrkaError::Io(_) | OrkaError::Format(_) => 4,
                _ => 2,
            },
        }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("orka: {self}");
        ExitCode::from(self.exit_code())
    }
}

impl From<OrkaError> for CliError {
    fn from(e: OrkaError) -> Self {
        match e {
            OrkaError::NodeBudgetExceeded { nodes, budget } => CliError::Budget(format!(
                "node budget exhausted: a partition needs {nodes} nodes, budget is {budget}"
            )),
            OrkaError::EnumerationBudgetExceeded { candidates, budget } => {
                CliError::Budget(format!(
                    "enumeration budget exhausted: {candidates} candidates, budget is {budget}"
                ))
            }
            other => CliError::Core(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        let budget: CliError = OrkaError::NodeBudgetExceeded {
            nodes: 10,
            budget: 5,
        }
        .into();
        assert_eq!(budget.exit_code(), 3);
        assert!(budget.to_string().contains("10"));
        assert_eq!(
            CliError::from(OrkaError::InvalidParameter("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::usage("x").exit_code(), 2);
        assert_eq!(CliError::format("x".into()).exit_code(), 4);
        let io = CliError::io(Path::new("a"), std::io::Error::other("gone"));
        assert_eq!(io.exit_code(), 4);
    }
}
