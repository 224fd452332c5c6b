use thiserror::Error;

use crate::graph::Key;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing value for key {0}")]
    MissingKey(Key),
    #[error("key {0} already has a value")]
    DuplicateKey(Key),
    #[error("value stored for {0} does not match its kind")]
    WrongVariableType(Key),
    #[error("factor references unknown key {0}")]
    UnknownFactorKey(Key),
    #[error("unknown factor id {0}")]
    UnknownFactor(usize),
    #[error("system is rank deficient while eliminating {0}; is a prior or gauge missing?")]
    RankDeficient(Key),
    #[error("non-finite value encountered while linearizing {0}")]
    NonFinite(String),
    #[error("budget exhausted: {0}")]
    BudgetExceeded(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown object {0}")]
    UnknownObject(u32),
    #[error("frame {0} is not available")]
    UnknownFrame(u32),
    #[error("trajectory mismatch: {0}")]
    FrameMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
