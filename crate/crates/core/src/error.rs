//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site count {0} must be a positive multiple of 3")]
    BadSiteCount(usize),

    #[error("configuration is not equal-density: species counts {counts:?} on {n} sites")]
    NotEqualDensity { n: usize, counts: [usize; 3] },

    #[error("unknown species symbol '{0}' (expected A, B or C)")]
    BadSpeciesSymbol(char),

    #[error("empty configuration literal")]
    EmptyConfiguration,

    #[error("memory budget exceeded: {required} bytes required, budget is {budget} bytes")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("state space too large for a dense eigensolve: {dim} states, cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("eigensolver stalled: residual {residual:.3e} after {iterations} iterations")]
    EigNonConvergence { residual: f64, iterations: usize },

    #[error("test function has zero variance")]
    ZeroVariance,

    #[error("grid mean of the mode function is {0:.3e}, it must vanish")]
    NonZeroMean(f64),

    #[error("batch-means estimate needs at least {need} batches, got {got}; run longer")]
    TooFewBatches { need: usize, got: usize },

    #[error("autocorrelation window did not stabilize within {max_lag} lags (tau estimate {tau:.3})")]
    WindowNotConverged { max_lag: usize, tau: f64 },

    #[error("burn-in {burn_in} must be shorter than the horizon {horizon}")]
    BurnInTooLong { burn_in: f64, horizon: f64 },

    #[error("orbit did not return to the section within horizon {horizon} (initial point too close to a boundary or the fixed point)")]
    NoReturn { horizon: f64 },

    #[error("step size underflow at r = {r:.6e} (state too close to the simplex boundary)")]
    StepUnderflow { r: f64 },

    #[error("no period-1 orbit bracket on the search ray: {0}")]
    BracketFailure(String),

    #[error("time step {dt:.3e} violates the stability bound {bound:.3e} for the {scheme} scheme")]
    CflViolation { dt: f64, bound: f64, scheme: &'static str },

    #[error("non-finite field value at step {step}, cell {cell}")]
    NonFinite { step: usize, cell: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
