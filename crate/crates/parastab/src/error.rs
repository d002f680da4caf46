//! Error types shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("grid size {0} is not a power of two >= 16")]
    BadGridSize(usize),

    #[error("grid mismatch: operands live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("value not representable: {0}")]
    Overflow(String),

    #[error("zero block: ratio undefined")]
    ZeroBlock,

    #[error("no admissible m on this grid (searched m in [0, {max_m}])")]
    NoAdmissibleM { max_m: usize },

    #[error("data norm {data_hnorm:.3e} too large: solved beta {beta_solved:.6} < sigma+tau = {required:.6}")]
    DataTooLarge {
        data_hnorm: f64,
        beta_solved: f64,
        required: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("linear solve failed: residual {residual:.3e} exceeds {tolerance:.3e}")]
    SolveFailed { residual: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
