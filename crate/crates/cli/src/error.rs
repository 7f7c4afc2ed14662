//! Command-line error type with the documented exit codes.

use papr_core::SimError;

/// Exit codes: 0 success, 1 usage/config, 2 runtime, 3 non-convergence.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn non_convergence(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        // Errors surfacing during a run are runtime failures; config
        // problems are caught by validation before any run starts.
        CliError::runtime(err.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}
