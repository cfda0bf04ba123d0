use std::fmt;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller supplied something the model cannot accept.
    Validation,
    /// A solver or integrator failed on otherwise valid input.
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("vehicle {vehicle} starts with congestion factor {gamma} > 1 (negative prescribed velocity); rerun with the permissive flag to allow it")]
    InitialOverload { vehicle: usize, gamma: f64 },

    #[error("{operation} is only defined on an open link")]
    RequiresOpenLink { operation: &'static str },

    #[error("non-finite state at step {step} (t = {t} s), vehicle {vehicle}")]
    NonFiniteState { step: usize, t: f64, vehicle: usize },

    #[error("analytic z-variable of vehicle {vehicle} is not positive at t = {t} s")]
    NonPositiveZ { vehicle: usize, t: f64 },

    #[error("time {t} s is outside the trajectory span [{start}, {end}]")]
    OutsideSpan { t: f64, start: f64, end: f64 },

    #[error("minimality check failed at t = {t} s: {crossed} adjacent pairs already crossed (scan step {step} s too coarse)")]
    Minimality { t: f64, crossed: usize, step: f64 },

    #[error("{count} passing events exceed the bound {limit} for this fleet")]
    EventLimit { count: usize, limit: usize },

    #[error("no positive equilibrium gap exists for vehicle {vehicle}")]
    NoEquilibrium { vehicle: usize },

    #[error("decay fit window is empty for vehicle {vehicle}")]
    EmptyFitWindow { vehicle: usize },

    #[error(transparent)]
    Config(#[from] crate::io::ConfigErrors),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFiniteState { .. }
            | Error::NonPositiveZ { .. }
            | Error::Minimality { .. }
            | Error::EventLimit { .. }
            | Error::NoEquilibrium { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidInput(msg.to_string())
    }

    pub(crate) fn io(context: impl fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            context: context.to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
