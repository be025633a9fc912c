use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter record failed validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An iterative solver ran out of iterations.
    #[error("{stage} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// The adaptive integrator could not keep the step above its floor.
    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s); problem looks stiff")]
    StepUnderflow { t: f64, h: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
