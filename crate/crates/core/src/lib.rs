//! Relaxed ADMM viewed as a Douglas–Rachford recursion on a single state vector,
//! together with tools that bound its convergence:
//!
//! * proximity and reflected proximity operators for quadratic, weighted-ℓ₁ and
//!   piecewise-linear terms ([`prox`], [`staircase`]);
//! * the scaled ADMM iteration and the equivalent state recursion ([`admm`]);
//! * slope bounds of the reflected operators and contraction factors ([`contraction`]);
//! * closed-form eigenvalues and eigenvalue loci of the iteration matrix
//!   ([`locus`], [`cs`]);
//! * a weighted Lasso benchmark with empirical rate fitting ([`lasso`], [`rate`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
extern crate alloc;

pub mod admm;
pub mod contraction;
pub mod cs;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod locus;
pub mod problem;
pub mod prox;
pub mod rate;
pub mod staircase;

pub use admm::{AdmmConfig, AdmmSolver, AdmmState, IterationRecord, RunResult, Termination};
pub use contraction::{AlphaBox, BoundSpectrum, JointContraction, JointSearch, SlopeRange, SpectralModel};
pub use error::{Error, Result};
pub use locus::{Counts, LevelSpec, Levels, Locus, LocusParams};
pub use problem::{Direction, PiecewiseLinear1D, SeparableFunction, SplitProblem};
pub use prox::SplitOperators;
