use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid order function: {0}")]
    InvalidOrder(String),

    #[error("order α({t}) = {alpha} left (0, 1)")]
    OrderOutOfRange { t: f64, alpha: f64 },

    #[error("σ root solve failed at t_k = {t_k}: {reason}")]
    SigmaSolve { t_k: f64, reason: String },

    #[error("σ root solve failed at step {step}: {source}")]
    ScheduleStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty exponential sum: N_hi = {n_hi} <= N_lo = {n_lo}")]
    EmptyQuadrature { n_lo: i64, n_hi: i64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("history bank out of sequence: bank at step {bank_step}, requested step {requested}")]
    StepOrder { bank_step: usize, requested: usize },

    #[error(
        "adaptive quadrature did not converge: error estimate {estimate:e} > tolerance {tol:e}"
    )]
    QuadratureNonConvergence { estimate: f64, tol: f64 },

    #[error("storage cap exceeded: {required} scalars needed, cap is {cap}")]
    StorageCap { required: usize, cap: usize },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}
