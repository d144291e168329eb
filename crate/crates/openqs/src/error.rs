use thiserror::Error;

/// Errors raised by operator algebra, samplers, and map builders.
#[derive(Debug, Error)]
pub enum OqsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("composite dimension {total} does not factor as {dim_s}*{dim_e}")]
    BadFactorization {
        total: usize,
        dim_s: usize,
        dim_e: usize,
    },

    #[error("operator fails predicate `{predicate}` (defect {defect:.3e}, tol {tol:.3e})")]
    PredicateFailed {
        predicate: &'static str,
        defect: f64,
        tol: f64,
    },

    #[error("non-finite entries in matrix")]
    NonFinite,

    #[error("linear solve failed: {0}")]
    SingularSolve(&'static str),

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("times must be strictly decreasing: t[{index}] = {value}")]
    UnorderedTimes { index: usize, value: f64 },

    #[error("invalid process value {0}: dichotomic trajectories take values ±1")]
    BadProcessValue(f64),

    #[error("invalid parameter {name}: {reason}")]
    BadParameter { name: &'static str, reason: String },

    #[error("unsupported truncation order {0} (supported: 1, 2, 4 for zero-mean)")]
    UnsupportedOrder(usize),

    #[error("size cap exceeded: {what} = {got} > cap {cap}")]
    CapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("correlation horizon too short: |C({horizon})| = {tail:.3e} above cutoff {cutoff:.3e}")]
    HorizonTooShort {
        horizon: f64,
        tail: f64,
        cutoff: f64,
    },

    #[error("environment state is not thermal: {0}")]
    NotThermal(String),

    #[error("Hamiltonian spectrum is degenerate within gap tolerance {0:.3e}")]
    DegenerateSpectrum(f64),

    #[error("zero-probability measurement branch at step {0}")]
    ZeroProbabilityBranch(usize),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, OqsError>;
