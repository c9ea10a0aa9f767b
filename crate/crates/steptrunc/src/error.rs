use thiserror::Error;

/// Errors surfaced by the tensor kernels, solvers and integrators.
#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dense memory budget exceeded: {required_bytes} bytes required, {budget_bytes} allowed")]
    MemoryBudget {
        required_bytes: usize,
        budget_bytes: usize,
    },

    #[error("TT rank cap exceeded: rank {rank} > cap {cap} at edge {edge}")]
    RankCap { rank: usize, cap: usize, edge: usize },

    #[error("step size underflow: dt = {dt:e} below {floor:e} (problem too stiff for the dense reference)")]
    StepUnderflow { dt: f64, floor: f64 },

    #[error("linear solve did not converge: {0}")]
    LinearSolve(String),

    #[error("Newton iteration did not converge: {0}")]
    Newton(String),

    #[error("integration step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
