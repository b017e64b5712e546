use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {axis} = {value} lies outside [-1, 1]")]
    OutOfRange { axis: usize, value: f64 },

    /// A map image left the box by more than the clamp band.
    #[error("{}", range_violation_message(.t, .axis, .value))]
    RangeViolation {
        /// Orbit time of the offending iterate, when known.
        t: Option<usize>,
        axis: usize,
        value: f64,
    },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("division by a denominator of magnitude {0:e}")]
    DivisionByZero(f64),

    #[error("analytic Lipschitz constant is only available for AR maps")]
    AnalyticUnavailable,

    #[error("chain reached a state with no observed successor at t = {t}")]
    DanglingState { t: usize },

    #[error("no cycle can be certified within a window of {len} samples")]
    NoCycleWithinHorizon { len: usize },

    #[error("input is not certified periodic: {0}")]
    NotPeriodic(String),

    #[error("t = {t} lies before the phase origin T = {origin}")]
    BeforePhaseOrigin { t: u64, origin: u64 },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("root finding failed: {0}")]
    RootFindingFailed(String),

    #[error("linear system is ill-conditioned (condition estimate {estimate:e})")]
    IllConditioned { estimate: f64 },

    #[error("characteristic roots classify the recursion as unbounded")]
    RefusedUnbounded,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn range_violation_message(t: &Option<usize>, axis: &usize, value: &f64) -> String {
    match t {
        Some(t) => format!("iterate at t = {t} leaves the box: coordinate {axis} = {value}"),
        None => format!("map image leaves the box: coordinate {axis} = {value}"),
    }
}
