use coopmac::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at '{pointer}': {message}")]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Core(#[from] coopmac::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// A check the command runs on its own results failed.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn schema(pointer: &str, message: impl Into<String>) -> Self {
        Self::Schema {
            pointer: pointer.to_string(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for unsupported requests, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema { .. } | Self::Io { .. } => 2,
            Self::Core(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Capability => 3,
                ErrorClass::Numerical => 4,
            },
            Self::Validation(_) => 4,
        }
    }
}
