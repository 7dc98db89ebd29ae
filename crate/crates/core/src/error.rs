use thiserror::Error;

/// Everything that can go wrong while loading, solving or checking a model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(String),

    #[error("model JSON could not be parsed: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state space is empty")]
    EmptyStateSpace,

    #[error("duplicate state identifier `{0}`")]
    DuplicateState(String),

    #[error("unknown state identifier `{0}`")]
    UnknownState(String),

    #[error("target set is empty")]
    EmptyTarget,

    #[error("row of state `{state}` denotes an empty credal set: {detail}")]
    EmptyCredalRow { state: String, detail: String },

    #[error("row of state `{state}` has a non-stochastic distribution: {detail}")]
    NonStochasticVertex { state: String, detail: String },

    #[error("weight W({from},{to}) = {weight} on a support edge must be strictly positive")]
    NonpositiveSupportWeight {
        from: String,
        to: String,
        weight: f64,
    },

    #[error("weight W({from},{to}) = {weight} is not a finite nonnegative number")]
    InvalidWeight {
        from: String,
        to: String,
        weight: f64,
    },

    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("linear system is numerically singular (pivot {pivot:e} at column {column} of {size})")]
    SingularSystem {
        column: usize,
        size: usize,
        pivot: f64,
    },

    #[error("credal row is infeasible: {0}")]
    InfeasibleRow(String),

    #[error("condition R1 is violated; trap states: {trap:?}")]
    R1Violated { trap: Vec<String> },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    MaxItersExceeded {
        iterations: usize,
        last_change: f64,
        partial: Vec<f64>,
    },

    #[error("combinatorial blowup: {count} exceeds the cap of {cap}")]
    CombinatorialBlowup { count: u128, cap: u128 },

    #[error("invalid option: {0}")]
    InvalidOption(String),
}

pub type Result<T> = std::result::Result<T, Error>;
