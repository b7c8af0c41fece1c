use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced while validating data, parsing files or training models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("price grid must have at least one interval")]
    InvalidGrid,
    #[error("negative price {0}")]
    NegativePrice(i64),
    #[error("winning record is missing its market price")]
    WinMissingPrice,
    #[error("winning record has market price {price} >= bid {bid} (ties lose)")]
    WinPriceNotBelowBid { price: u32, bid: u32 },
    #[error("losing record carries a market price")]
    LoseWithPrice,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("bid policy produced out-of-range bid {bid} (grid max {max})")]
    BidOutOfRange { bid: i64, max: u32 },
    #[error("invalid bid policy: {0}")]
    Policy(String),
    #[error("invalid market spec: {0}")]
    MarketSpec(String),
    #[error("invalid log schema: {0}")]
    Schema(String),
    #[error("feature index {index} out of range for vocabulary of size {size}")]
    VocabIndexOutOfRange { index: usize, size: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("unroll depth {depth} out of range [1, {max}]")]
    DepthOutOfRange { depth: usize, max: usize },
    #[error("shape mismatch in {0}")]
    ShapeMismatch(&'static str),
    #[error("training diverged at step {step}: non-finite loss")]
    Diverged { step: usize },
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error("loss defined only for winning records with an observed market price")]
    NotAWin,
    #[error("metric requires both winning and losing records")]
    SingleClass,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
