//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while parsing, evaluating, integrating,
/// inverting, or classifying.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed expression source. `offset` is a byte offset into the input.
    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Identifier that is not `x`, `pi`, `e`, or a catalog function.
    #[error("unknown identifier `{name}` at byte {offset}; supported functions: {catalog}")]
    UnknownIdentifier {
        name: String,
        offset: usize,
        catalog: String,
    },

    /// A function evaluation produced a non-finite value or hit a domain
    /// violation (ln of a nonpositive number, division by zero, ...).
    #[error("evaluation failed at x = {x}: {what}")]
    EvalFailure { x: f64, what: String },

    /// Adaptive quadrature ran out of its node budget. Carries the best
    /// estimate obtained so far.
    #[error("quadrature did not converge: best estimate {estimate} with error {error:e} > requested {requested:e}")]
    Accuracy {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    /// Inversion target lies outside the attainable range.
    #[error("target {y} outside attainable range [{lo}, {hi}]")]
    OutOfRange { y: f64, lo: f64, hi: f64 },

    /// Samples of a supposedly monotone function changed direction.
    #[error("monotonicity violated between x = {x0} and x = {x1}")]
    MonotonicityViolation { x0: f64, x1: f64 },

    /// f' vanished where the formulas divide by it.
    #[error("derivative vanishes at x = {x}")]
    DerivativeDegenerate { x: f64 },

    /// A point fell outside the interval it must belong to.
    #[error("point {x} outside domain {domain}")]
    OutsideDomain { x: f64, domain: String },

    /// h vanishes or flips sign inside the requested domain.
    #[error("h is singular near x = {x}: {what}")]
    SingularH { x: f64, what: String },

    /// The requested check does not apply to this generator.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Structurally invalid input (bad tolerances, bad distributions, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
