use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid flux law: {0}")]
    InvalidLaw(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// Newton did not converge; callers are expected to retry with a smaller step.
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    StepFailure { iterations: usize, residual: f64 },
    #[error("solver integrity violated: {0}")]
    Integrity(String),
    #[error("time step underflow at t = {t:e}")]
    Stall { t: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("gradient singularity at face {face} (u = {u:e})")]
    Singularity { face: usize, u: f64 },
}
