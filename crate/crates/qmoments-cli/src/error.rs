use std::fmt;

/// Failure with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INVALID: u8 = 4;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: msg.into() }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: msg.into() }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::numerical(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<qmoments::Error> for CliError {
    fn from(e: qmoments::Error) -> Self {
        use qmoments::Error::*;
        let code = match &e {
            InvalidArgument(_) | InvalidState(_) | Mismatch(_) | DegreeOverflow { .. } => EXIT_CONFIG,
            Numerical(_) | Singular(_) | InsufficientData(_) | ZeroHbar => EXIT_NUMERICAL,
            InvalidSolution(_) | EmptyFeasibleSet(_) => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}
