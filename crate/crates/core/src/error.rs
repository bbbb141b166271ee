use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time step {dt:.3e} exceeds the admissible step {admissible:.3e}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("density left [{lower:.6e}, {upper:.6e}]: observed [{min:.6e}, {max:.6e}] at t = {t:.6e}")]
    DensityBound {
        t: f64,
        min: f64,
        max: f64,
        lower: f64,
        upper: f64,
    },

    #[error("inner iteration stalled after {iterations} sweeps with relative residual {residual:.3e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("test function does not vanish at the end of the window (|phi(T)| = {0:.3e})")]
    TestFunctionSupport(f64),

    #[error("initial data violates {hypothesis}: {detail}")]
    Inadmissible { hypothesis: String, detail: String },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("run at eps = {epsilon:.6e} failed at step {step}: {source}")]
    RunFailed {
        epsilon: f64,
        step: usize,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
