use thiserror::Error;

use crate::shooting::Outcome;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("system is not superhomogeneous (d = {d})")]
    NotSuperhomogeneous { d: f64 },

    #[error("parameters outside the admissible range: {0}")]
    OutOfRange(String),

    #[error("series startup rejected: {0}")]
    Startup(String),

    #[error("step size underflow at r = {r} (h = {h})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("zero crossing near r = {r} could not be localized")]
    EventNotLocalized { r: f64 },

    #[error("non-finite state encountered at r = {r}")]
    NonFinite { r: f64 },

    #[error("invalid shooting bracket: {0}")]
    InvalidBracket(String),

    #[error("bisection did not converge within {iterations} iterations")]
    BisectionCap { iterations: usize },

    #[error("rescaling rejected: {0}")]
    Rescale(String),

    #[error("quadrature on [{a}, {b}] reached error {estimate:e}, requested {tol:e}")]
    Quadrature { a: f64, b: f64, estimate: f64, tol: f64 },

    #[error("trajectory crossed zero: {0:?}")]
    ZeroCrossing(Outcome),

    #[error("tail estimate {estimate:e} exceeds the certification limit {limit:e}")]
    TailTooLarge { estimate: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
}
