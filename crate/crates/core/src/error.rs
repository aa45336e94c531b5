use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has no rows")]
    Empty,

    #[error("non-finite entry at ({}, {})", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },

    #[error("negative off-diagonal entry {value} at ({}, {})", .row + 1, .col + 1)]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },

    #[error("row {} sums to {sum}, tolerance {tolerance}", .row + 1)]
    RowSumViolation { row: usize, sum: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("switched system needs at least one subsystem")]
    NoSubsystems,

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("control value {value:?} is not in the probability simplex")]
    SimplexViolation { value: Vec<f64> },

    #[error("invalid control breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("control covers [0, {control_horizon}] but the horizon is {horizon}")]
    HorizonMismatch { control_horizon: f64, horizon: f64 },

    #[error("matrix exponential overflow (norm {norm})")]
    Overflow { norm: f64 },

    #[error("terminal costate entries sum to {sum}, expected zero")]
    TerminalNotZeroSum { sum: f64 },

    #[error("reduction basis is not adapted to the consensus direction (residual {residual})")]
    BasisNotAdapted { residual: f64 },

    #[error("invalid reduction basis: {0}")]
    InvalidBasis(String),

    #[error("operation requires n = 2, got n = {0}")]
    DimensionNotTwo(usize),

    #[error("operation requires n = 3, got n = {0}")]
    DimensionNotThree(usize),

    #[error("operation requires exactly two subsystems, got {0}")]
    RequiresTwoSubsystems(usize),

    #[error("matrix {index} is not Hurwitz (trace {trace}, determinant {det})")]
    NotHurwitz { index: usize, trace: f64, det: f64 },

    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),

    #[error("invalid solver option: {0}")]
    InvalidOption(String),
}

pub type Result<T> = std::result::Result<T, Error>;
