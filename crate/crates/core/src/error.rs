use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval ({a}, {b}): {reason}")]
    InvalidInterval { a: String, b: String, reason: &'static str },

    #[error("stage {requested} exceeds the configured cap {cap}")]
    StageLimit { requested: usize, cap: usize },

    #[error("invalid stage state: {0}")]
    InvalidState(String),

    #[error("invalid piecewise-linear function: {0}")]
    InvalidPwl(String),

    #[error("level {0} is a critical value (image of a breakpoint)")]
    CriticalLevel(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("area formula mismatch: level sweep {sweep} vs |f'| integral {direct}")]
    AreaMismatch { sweep: String, direct: String },

    #[error("quadrature tolerance {tol:e} not met on [{a}, {b}]")]
    QuadratureTolNotMet { a: f64, b: f64, tol: f64 },

    #[error("test function does not vanish at the final time: |phi(T, x)| = {0:e}")]
    SupportViolation(f64),

    #[error("point {x} outside the field's sign interval ({alpha}, {beta})")]
    DomainViolation { x: f64, alpha: f64, beta: f64 },

    #[error("could not bracket F^-1 at value {0}")]
    BracketFailure(f64),

    #[error("[{x}, {y}] is not contained in a single monotone run")]
    NotMonotoneRun { x: String, y: String },

    #[error("parse error: {0}")]
    Parse(String),
}
