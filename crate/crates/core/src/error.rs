use thiserror::Error;

/// Errors produced by the low-rank kernels, problems and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("index ({row}, {col}) out of range for {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overflow evaluating entry ({row}, {col}); the iteration is diverging")]
    Overflow { row: usize, col: usize },

    #[error("spectral ratio {ratio:.3e} exceeds weight validity interval [1, {limit:.3e}]; weights valid up to R >= {ratio:.3e} are required")]
    SpectralRange { ratio: f64, limit: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("densification of {nrows}x{ncols} matrix exceeds the cap of {cap} entries")]
    DensifyCap {
        nrows: usize,
        ncols: usize,
        cap: usize,
    },

    #[error("time step {step}: fixed-point solve did not converge within {iterations} iterations")]
    StepNotConverged { step: usize, iterations: usize },

    #[error("iteration {iteration}: residual is {value}; the iteration is diverging")]
    Diverged { iteration: usize, value: f64 },

    #[error("SVD of a {nrows}x{ncols} matrix did not converge")]
    SvdNoConvergence { nrows: usize, ncols: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
