use dnp_core::DnpError;

/// Failure with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or usage, exit 2.
    Usage(String),
    /// Unreadable input or unwritable output, exit 3.
    Io(String),
    /// Solver failure, exit 4.
    Numerical(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

impl From<DnpError> for CliError {
    fn from(e: DnpError) -> Self {
        use DnpError::*;
        match e {
            DegenerateSite
            | InvalidParameter { .. }
            | InvalidTransition { .. }
            | EmptyShell { .. }
            | DimensionCap { .. }
            | EmptyEnsemble
            | LengthMismatch { .. }
            | NoOpticalInitialization => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
