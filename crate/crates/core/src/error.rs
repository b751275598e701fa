use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model equation was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// No admissible constant input sustains the requested trim condition.
    #[error("infeasible trim: {0}")]
    InfeasibleTrim(String),
    /// Path lookup outside `[0, length]`.
    #[error("path coordinate {s} outside [0, {length}]")]
    Range { s: f64, length: f64 },
    /// Failure inside the optimizer, with the time at which it occurred when known.
    #[error("solver error{}: {msg}", .time.map(|t| format!(" at t = {t:.3} s")).unwrap_or_default())]
    Solver { msg: String, time: Option<f64> },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn solver(msg: impl Into<String>, time: Option<f64>) -> Self {
        Error::Solver {
            msg: msg.into(),
            time,
        }
    }

    /// Attach a time stamp to errors raised while integrating.
    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            Error::Solver { msg, time: None } => Error::Solver { msg, time: Some(t) },
            Error::Domain(msg) => Error::Solver {
                msg: format!("domain error: {msg}"),
                time: Some(t),
            },
            Error::Range { s, length } => Error::Solver {
                msg: format!("path coordinate {s} outside [0, {length}]"),
                time: Some(t),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
