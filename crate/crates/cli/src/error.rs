//! CLI error with process exit-code categories.

use std::fmt;

use groupcast::Error as CoreError;

/// Exit-code category: 2 config, 3 data, 4 numerical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: String) -> Self {
        Self { kind, message }
    }

    /// Machine-readable error report, printed to stderr on failure.
    pub fn report(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind.name(),
                "exit_code": self.kind.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::SpecMismatch(_) => ErrorKind::Config,
            CoreError::UnknownAttribute(_) => ErrorKind::Config,
            CoreError::NonPositiveValue { .. }
            | CoreError::SeriesTooShort { .. }
            | CoreError::EmptyBottom
            | CoreError::KeyOutsideSchema(_)
            | CoreError::NonFiniteQuantity { .. }
            | CoreError::WeekOutOfRange { .. }
            | CoreError::ShapeMismatch { .. } => ErrorKind::Data,
            CoreError::DomainViolation { .. }
            | CoreError::InfeasibleOrder { .. }
            | CoreError::DegenerateSeries
            | CoreError::InvalidCoefficients(_)
            | CoreError::InsufficientSample { .. }
            | CoreError::InvalidLags(_)
            | CoreError::NoFeasibleModel { .. }
            | CoreError::DegenerateResiduals(_)
            | CoreError::SingularSystem(_)
            | CoreError::ZeroDenominator => ErrorKind::Numerical,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(ErrorKind::Data, e.to_string())
    }
}
