use thiserror::Error;

use crate::dyadic::DyadicPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point {0} lies outside the path domain")]
    OutsideDomain(DyadicPoint),
    #[error("{0} is not a dyadic rational representable at depth <= {max}", max = crate::MAX_DEPTH)]
    NotDyadic(f64),
    #[error("invalid dyadic point: depth {depth}, index {index}")]
    InvalidPoint { depth: u32, index: i64 },
    #[error("depth {requested} exceeds the cap of {cap}")]
    DepthCap { requested: u32, cap: u32 },
    #[error("log argument {arg} <= 1 in confidence width (x = {x}, delta = {delta})")]
    LogDomain { x: f64, delta: f64, arg: f64 },
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("optimizer state error: {0}")]
    State(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("truth depth {truth_depth} is shallower than query depth {needed}")]
    TruthTooShallow { truth_depth: u32, needed: u32 },
}
