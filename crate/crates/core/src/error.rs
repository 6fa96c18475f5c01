use thiserror::Error;

/// Error type shared by all solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("valuation table not nondecreasing: value at {higher:?} is below value at {lower:?}")]
    NotMonotone { lower: Vec<u32>, higher: Vec<u32> },

    #[error("enumeration budget exceeded: instance needs {required} cells, budget allows {allowed}")]
    BudgetExceeded { required: u128, allowed: u128 },

    #[error("bundle outside the tabulated domain")]
    OutsideDomain,

    #[error("candidate pair is not an equilibrium: agent {agent} gains {gain} by moving to {deviation:?}")]
    NotAnEquilibrium {
        agent: usize,
        deviation: Vec<u32>,
        gain: String,
    },

    #[error("candidate pair is not an equilibrium: allocation is not feasible")]
    InfeasibleAllocation,

    #[error(
        "units {cheap_unit} and {dear_unit} of item {item} carry different prices \
         ({cheap_price} vs {dear_price}); the buyer of the dearer unit would switch"
    )]
    PriceArbitrage {
        item: usize,
        cheap_unit: usize,
        dear_unit: usize,
        cheap_price: String,
        dear_price: String,
    },

    #[error("price vector invalid: {0}")]
    InvalidPrices(String),

    #[error("allocation is not in canonical coalition form (buyer {buyer})")]
    NotCanonical { buyer: usize },

    #[error("outcome is not in the matching core: {0}")]
    NotInCore(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
