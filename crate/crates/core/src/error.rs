use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates one of the model's admissibility bounds.
    #[error("inadmissible parameter: {bound} violated ({name} = {value})")]
    Admissibility {
        bound: &'static str,
        name: &'static str,
        value: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("system cannot be linearized at {0}")]
    NotLinearizable(&'static str),

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A matrix that must be inverted is singular at the requested point.
    #[error("singular matrix {0}")]
    Singular(String),

    #[error("no Hopf bifurcation: {0}")]
    NoHopf(String),

    #[error("numerical instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("solution diverged at t = {time} (|state| > {bound})")]
    Divergence { time: f64, bound: f64 },

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Admissibility { .. })
    }
}
