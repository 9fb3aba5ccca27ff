use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet order is not a permutation of 0..{0}")]
    InvalidOrder(usize),
    #[error("character {ch} at position {pos} is outside the alphabet of size {size}")]
    CharOutOfRange { ch: u32, pos: usize, size: usize },
    #[error("string must be non-empty")]
    EmptyString,
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("input length {n} exceeds cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("flip probability {0} outside [0, 1/3]")]
    InvalidFlipProb(f64),
    #[error("epsilon {0} outside (0, 1/2)")]
    InvalidEpsilon(f64),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error("empty search domain")]
    EmptyDomain,
    #[error("nested cost needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("pattern length {0} is below 4")]
    PatternTooShort(usize),
    #[error("pattern longer than text ({m} > {n})")]
    PatternTooLong { m: usize, n: usize },
    #[error("binary alphabet required")]
    NotBinary,
    #[error("index {index} out of range for length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("cycle lengths differ: {0} vs {1}")]
    UnequalLengths(usize, usize),
    #[error("need at least {need} items, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
