use alloc::string::String;

use crate::problem::ValidationReport;

/// Errors raised by the solver and the spectral analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no prox solver for {0}")]
    UnsupportedCombination(String),
    #[error("prox system matrix is singular (min eigenvalue {min_eigenvalue:e})")]
    SingularSystem { min_eigenvalue: f64 },
    #[error("invalid piecewise-linear function: {0}")]
    InvalidPiecewise(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("curvature bounds do not commute (residual {residual:e})")]
    NonCommuting { residual: f64 },
    #[error("upper slope bound is unbounded: C + M is singular on the span of A")]
    UnboundedSlope,
    #[error("level counts {0} do not reduce to a canonical ordering")]
    DegenerateCounts(String),
    #[error("matrix is not orthogonal (residual {residual:e})")]
    NotOrthogonal { residual: f64 },
    #[error("H structure mismatch at block {block}")]
    StructureMismatch { block: usize },
    #[error("need at least 20 usable iterations, found {usable}")]
    InsufficientHistory { usable: usize },
    #[error("coordinate {coordinate} sits on a staircase junction")]
    BreakpointAmbiguity { coordinate: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
