use promptcast_core::Error;

/// A failure mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, unreadable input or unwritable output (exit 2).
    Config(String),
    /// A computation that could not be completed (exit 3).
    Numeric(String),
    /// An input whose records contradict each other (exit 4).
    Consistency(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Consistency(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numeric(m) => write!(f, "numeric failure: {m}"),
            Self::Consistency(m) => write!(f, "consistency failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) | Error::Domain(_) | Error::Format(_) | Error::EmptyPredictions => {
                Self::Config(msg)
            }
            Error::UninformativeSignal { .. }
            | Error::Degenerate { .. }
            | Error::NumericFailure(_)
            | Error::Boundary { .. }
            | Error::DiscountIneffective(_) => Self::Numeric(msg),
            Error::TimeRegression { .. } | Error::Inconsistent { .. } => Self::Consistency(msg),
        }
    }
}
