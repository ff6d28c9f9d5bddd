use std::path::PathBuf;

/// Errors raised by the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("basis size {n_max} outside 1..={max}")]
    BasisSize { n_max: usize, max: usize },

    #[error("Gram-Schmidt lost orthogonality (defect {defect:e} at n_max = {n_max}); lower n_max")]
    Orthogonality { defect: f64, n_max: usize },

    #[error("index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("derivative order {0} not supported (0, 1 or 2)")]
    DerivativeOrder(usize),

    #[error("point {value} outside [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("data field is identically zero")]
    ZeroData,

    #[error("unknown test problem {0} (expected 1..=4)")]
    UnknownTest(u32),

    #[error("time grid cannot resolve sin(2n^2 t) for n = {n}: 2 n^2 d_t = {product} >= 1")]
    Unresolved { n: u32, product: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
