//! Library surface of the `opab` CLI: configuration schemas, the experiment
//! harness, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod policy_spec;

/// CLI error carrying the process exit code: 2 for usage/config problems,
/// 1 for runtime failures.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn usage(msg: impl ToString) -> Self {
        CliError { message: msg.to_string(), exit_code: 2 }
    }

    pub fn runtime(msg: impl ToString) -> Self {
        CliError { message: msg.to_string(), exit_code: 1 }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<opab_core::Error> for CliError {
    fn from(e: opab_core::Error) -> Self {
        match &e {
            opab_core::Error::Argument(_) | opab_core::Error::Unimplemented(_) => CliError::usage(e),
            _ => CliError::runtime(e),
        }
    }
}
