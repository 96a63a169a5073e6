use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "non-stationary excitation: Gershgorin bound (alpha_n + k*alpha_x)/beta = {bound} >= 1 \
         (alpha_n={alpha_n}, alpha_x={alpha_x}, beta={beta}, k={k})"
    )]
    NonStationary {
        bound: f64,
        alpha_n: f64,
        alpha_x: f64,
        beta: f64,
        k: usize,
    },

    #[error("event at time {event} is not before evaluation time {t}")]
    EventNotInPast { event: f64, t: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error(
        "lattice side {side} too small for neighborhood size {k} (need side >= 3, k in {{4, 8}})"
    )]
    InvalidLattice { side: usize, k: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
