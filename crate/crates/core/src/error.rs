use thiserror::Error;

use crate::growth::GrowthRun;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("no closed-form density for stable index nu = {nu}; use sampling or a numeric route")]
    UnsupportedDensity { nu: f64 },

    #[error("{what} did not converge within {cap} iterations")]
    NonConvergence { what: &'static str, cap: usize },

    #[error("convolution leaves the closed family: {0}")]
    ClosureViolation(String),

    #[error("density tables do not share a grid: {0}")]
    GridMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("sampled masses summed to zero in {attempts} consecutive attempts")]
    DegenerateSum { attempts: usize },

    #[error("density diverges at the boundary (component {index})")]
    BoundaryDivergence { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature failed: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("unknown parent vertex {0}")]
    UnknownParent(usize),

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("time violation: {0}")]
    TimeViolation(String),

    #[error("no eligible attachment target")]
    NoEligibleTarget,

    #[error("insufficient support: {0}")]
    InsufficientSupport(String),

    #[error("growth halted at step {step}: no eligible targets")]
    HaltedNoTargets { step: u64, partial: Box<GrowthRun> },
}
