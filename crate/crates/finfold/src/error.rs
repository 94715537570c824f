//! Error taxonomy shared by the library and the command-line tools.
//!
//! Every variant maps to a stable machine-parsable class string so that CLI
//! failures can be matched by scripts without parsing prose.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violates a physical or mathematical precondition.
    #[error("{0}")]
    Domain(String),

    /// A structural argument (count, step size, window, ordering) is unusable.
    #[error("{0}")]
    Argument(String),

    /// The integrator produced a non-finite state.
    #[error("integration diverged to a non-finite state at t = {t} s")]
    NumericalDivergence { t: f64 },

    /// Speed never settled, so the record has no steady phase to split off.
    #[error("speed never settles: no steady phase found in the trajectory")]
    NoSteadyPhase,

    /// The input series carries no usable variation for the requested fit.
    #[error("{0}")]
    DegenerateData(String),

    /// The planar points do not determine a circle.
    #[error("points are collinear or otherwise do not determine a circle")]
    CircleDegenerate,

    /// The lateral series holds fewer oscillation cycles than the estimator needs.
    #[error("{0}")]
    NoOscillation(String),

    /// The optimizer could not produce a usable fit.
    #[error("{0}")]
    CalibrationFailure(String),

    /// A configuration value failed validation.
    #[error("{0}")]
    Config(String),

    /// A file could not be parsed into the expected shape.
    #[error("{0}")]
    Parse(String),

    /// An underlying I/O operation failed.
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => Error::Parse("csv i/o error".into()),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl Error {
    /// Stable class tag used as the machine-parsable CLI error prefix.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::NumericalDivergence { .. } => "numeric",
            Error::NoSteadyPhase => "no-steady-phase",
            Error::DegenerateData(_) => "degenerate-data",
            Error::CircleDegenerate => "circle-degenerate",
            Error::NoOscillation(_) => "no-oscillation",
            Error::CalibrationFailure(_) => "calibration",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
