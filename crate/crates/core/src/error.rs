use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("grid too small: need anti-diagonal {needed}, table covers {available}")]
    GridTooSmall { needed: usize, available: usize },

    #[error("table with n_max = {n_max} needs ~{ops} operations, budget is {budget}")]
    BudgetExceeded { n_max: usize, ops: u128, budget: u128 },

    #[error("threshold {k} exceeds the configured cap {cap}")]
    ThresholdCap { k: usize, cap: usize },

    #[error("rates differ from the table: table ({table_mu1}, {table_mu2}), got ({mu1}, {mu2})")]
    RateMismatch {
        table_mu1: f64,
        table_mu2: f64,
        mu1: f64,
        mu2: f64,
    },

    #[error("dual-path mismatch at ({n}, {m}): {error:e} > {tolerance:e}")]
    DualPathMismatch {
        n: usize,
        m: usize,
        error: f64,
        tolerance: f64,
    },

    #[error("singular balance system at pivot {0}")]
    Singular(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
