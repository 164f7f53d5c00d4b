use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("infeasible policy: {0}")]
    Infeasible(String),

    #[error("integrand returned a non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("correlation undefined: transmitter {index} has zero average power")]
    UndefinedCorrelation { index: usize },

    #[error("singular state: S{index} = 0 while its power terms are positive")]
    SingularState { index: usize },

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed specs, out-of-range parameters, wrong shapes.
    Input,
    /// The request is well formed but outside what the routine supports.
    Capability,
    /// A numerical check failed while computing.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_) | Error::Invalid(_) | Error::Shape(_) => ErrorClass::Input,
            Error::Capability(_) | Error::Budget { .. } => ErrorClass::Capability,
            Error::NonFinite { .. }
            | Error::Infeasible(_)
            | Error::UndefinedCorrelation { .. }
            | Error::SingularState { .. } => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !($cond) {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
