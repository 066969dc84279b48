use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error in {source_text:?}: {error}")]
    Parse {
        source_text: String,
        #[source]
        error: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("point {point:?} lies outside the regular domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("tensor is degenerate at {point:?} (condition number {condition:e})")]
    Degenerate { point: Vec<f64>, condition: f64 },
    #[error(
        "constraint complement is not transversal at {point:?} (det {determinant:e}, condition {condition:e})"
    )]
    Transversality {
        point: Vec<f64>,
        determinant: f64,
        condition: f64,
    },
    #[error("finite-difference step underflow at {point:?} along coordinate {coordinate}")]
    StepUnderflow { point: Vec<f64>, coordinate: usize },
    #[error("adaptive step size underflow at t = {time}")]
    AdaptiveUnderflow { time: f64 },
    #[error("empty sample set")]
    EmptySamples,
    #[error("unknown monitor {0:?}")]
    UnknownMonitor(String),
    #[error("unknown system {0:?}")]
    UnknownSystem(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("section does not invert the invariants: residual {residual:e} at {point:?}")]
    SectionIdentity { point: Vec<f64>, residual: f64 },
    #[error("trajectory truncated at t = {time} (left the regular domain)")]
    Truncated { time: f64 },
    #[error("system definition: {0}")]
    Definition(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Error {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }

    /// True for failures caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Eval(_)
                | Error::OutsideDomain { .. }
                | Error::Degenerate { .. }
                | Error::Transversality { .. }
                | Error::StepUnderflow { .. }
                | Error::AdaptiveUnderflow { .. }
                | Error::Truncated { .. }
                | Error::SectionIdentity { .. }
        )
    }
}
