use thiserror::Error;

/// Errors raised by the integrators and the transformation-method solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The problem itself is malformed, e.g. the right-hand side is not
    /// finite at the initial state.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A solver or integrator setting is out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
