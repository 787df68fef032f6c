use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    InvalidConfig(String),
    /// Geometric input that has no well-defined answer (e.g. collinear hull points).
    DegenerateInput(&'static str),
    /// Two arrays that must agree in shape do not. Shapes are `(rows, cols)`.
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// An input is smaller than the operation needs (window, stencil chain, ...).
    TooSmall(String),
    NonFinite(&'static str),
    CflViolation {
        dt: f64,
        dt_max: f64,
    },
    /// The wavefield blew up; `step` is the first time step at which it was detected.
    Divergence {
        step: usize,
        max_abs: f64,
    },
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DegenerateInput(what) => write!(f, "degenerate input: {what}"),
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::TooSmall(msg) => write!(f, "input too small: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::CflViolation { dt, dt_max } => write!(
                f,
                "time step {dt:e} s exceeds the stability limit {dt_max:e} s"
            ),
            Error::Divergence { step, max_abs } => write!(
                f,
                "wavefield diverged at step {step} (max |u| = {max_abs:e})"
            ),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
