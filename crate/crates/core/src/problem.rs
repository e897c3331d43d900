//! The split problem `min f1(x1) + f2(x2)  s.t.  A1 x1 = A2 x2 + b` and the
//! small library of separable functions the solver knows how to handle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, min_symmetric_eigenvalue, psd_tolerance};

/// Which of the two alternating directions an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    First,
    Second,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::First, Direction::Second];

    pub fn index(self) -> usize {
        match self {
            Direction::First => 0,
            Direction::Second => 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::First => f.write_str("f1"),
            Direction::Second => f.write_str("f2"),
        }
    }
}

/// A convex continuous piecewise-linear function of one variable.
///
/// `slopes[0]` applies left of `breakpoints[0]`, `slopes[k]` between
/// `breakpoints[k-1]` and `breakpoints[k]`, and the last slope to the right of the
/// last breakpoint. The function is anchored at `f(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear1D {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinear1D {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPiecewise(format!(
                "{} slopes for {} breakpoints",
                slopes.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().chain(slopes.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPiecewise("non-finite entry".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPiecewise("breakpoints must be strictly increasing".into()));
        }
        if slopes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidPiecewise("slopes must be non-decreasing".into()));
        }
        Ok(Self { breakpoints, slopes })
    }

    /// `w|x|`.
    pub fn abs(weight: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0], alloc::vec![-weight, weight])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value(&self, x: f64) -> f64 {
        // sum of hinges, shifted so that f(0) = 0
        let mut v = self.slopes[0] * x;
        for (k, &xk) in self.breakpoints.iter().enumerate() {
            let jump = self.slopes[k + 1] - self.slopes[k];
            v += jump * ((x - xk).max(0.0) - (-xk).max(0.0));
        }
        v
    }
}

/// The separable function kinds supported by the prox solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparableFunction {
    /// `½ xᵀQx − cᵀx`.
    Quadratic { q: DMatrix<f64>, c: DVector<f64> },
    /// `Σ w_j |x_j|`.
    WeightedL1 { weights: DVector<f64> },
    /// `Σ f_j(x_j)` with each `f_j` piecewise linear.
    PiecewiseLinear { pieces: Vec<PiecewiseLinear1D> },
}

impl SeparableFunction {
    pub fn dim(&self) -> usize {
        match self {
            SeparableFunction::Quadratic { c, .. } => c.len(),
            SeparableFunction::WeightedL1 { weights } => weights.len(),
            SeparableFunction::PiecewiseLinear { pieces } => pieces.len(),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            SeparableFunction::Quadratic { q, c } => 0.5 * x.dot(&(q * x)) - c.dot(x),
            SeparableFunction::WeightedL1 { weights } => weights.iter().zip(x.iter()).map(|(w, v)| w * v.abs()).sum(),
            SeparableFunction::PiecewiseLinear { pieces } => {
                pieces.iter().zip(x.iter()).map(|(p, &v)| p.value(v)).sum()
            }
        }
    }

    /// Problems with the parameters themselves, independent of any problem.
    fn defects(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            SeparableFunction::Quadratic { q, c } => {
                if !q.is_square() || q.nrows() != c.len() {
                    out.push(format!("Q is {}x{} but c has length {}", q.nrows(), q.ncols(), c.len()));
                } else if !is_symmetric(q, psd_tolerance(q)) {
                    out.push("Q is not symmetric".into());
                }
            }
            SeparableFunction::WeightedL1 { weights } => {
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                    out.push("weights must be finite and non-negative".into());
                }
            }
            // validated on construction
            SeparableFunction::PiecewiseLinear { .. } => {}
        }
        out
    }
}

/// Upper bound on the curvature of `f`: either a matrix or unbounded.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothness {
    Bounded(DMatrix<f64>),
    Unbounded,
}

/// `f − ½xᵀCx` and `½xᵀSx − f` are convex.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBounds {
    pub strong: DMatrix<f64>,
    pub smooth: Smoothness,
}

impl CurvatureBounds {
    pub fn is_strong_zero(&self) -> bool {
        self.strong.iter().all(|&v| v == 0.0)
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self.smooth, Smoothness::Unbounded)
    }

    /// `S − C ⪰ 0`, vacuous when `S` is unbounded.
    pub fn is_ordered(&self) -> bool {
        match &self.smooth {
            Smoothness::Unbounded => true,
            Smoothness::Bounded(s) => {
                let gap = s - &self.strong;
                gap.nrows() == 0 || min_symmetric_eigenvalue(&gap) >= -psd_tolerance(&gap)
            }
        }
    }
}

pub fn curvature_bounds(f: &SeparableFunction) -> CurvatureBounds {
    match f {
        SeparableFunction::Quadratic { q, .. } => {
            CurvatureBounds { strong: q.clone(), smooth: Smoothness::Bounded(q.clone()) }
        }
        SeparableFunction::WeightedL1 { .. } | SeparableFunction::PiecewiseLinear { .. } => {
            let n = f.dim();
            CurvatureBounds { strong: DMatrix::zeros(n, n), smooth: Smoothness::Unbounded }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitProblem {
    pub f1: SeparableFunction,
    pub f2: SeparableFunction,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b: DVector<f64>,
    pub e: DMatrix<f64>,
}

impl SplitProblem {
    pub fn function(&self, d: Direction) -> &SeparableFunction {
        match d {
            Direction::First => &self.f1,
            Direction::Second => &self.f2,
        }
    }

    pub fn constraint(&self, d: Direction) -> &DMatrix<f64> {
        match d {
            Direction::First => &self.a1,
            Direction::Second => &self.a2,
        }
    }

    /// Number of constraint rows `m`.
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> f64 {
        self.f1.value(x1) + self.f2.value(x2)
    }

    pub fn constraint_residual(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> DVector<f64> {
        &self.a1 * x1 - &self.a2 * x2 - &self.b
    }

    pub fn validate(&self) -> ValidationReport {
        validate_problem(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch(String),
    InvalidFunction {
        direction: Direction,
        reason: String,
    },
    AugmentationNotSymmetric,
    AugmentationNotPositiveDefinite {
        min_eigenvalue: f64,
    },
    /// `C + AᵀEA` has a negative eigenvalue, so `f + ½‖A·‖²_E` is not convex.
    NotConvex {
        direction: Direction,
        min_eigenvalue: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Violation::InvalidFunction { direction, reason } => write!(f, "{direction}: {reason}"),
            Violation::AugmentationNotSymmetric => f.write_str("E not symmetric"),
            Violation::AugmentationNotPositiveDefinite { min_eigenvalue } => {
                write!(f, "E not positive definite (min eigenvalue {min_eigenvalue:e})")
            }
            Violation::NotConvex { direction, min_eigenvalue } => {
                write!(f, "{direction} + augmentation not convex (min eigenvalue {min_eigenvalue:e})")
            }
        }
    }
}

/// Every violated precondition; empty means valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_problem(p: &SplitProblem) -> ValidationReport {
    let mut violations = Vec::new();
    let m = p.b.len();
    let mut shapes_ok = true;

    if p.e.nrows() != m || p.e.ncols() != m {
        violations.push(Violation::DimensionMismatch(format!(
            "E is {}x{}, expected {m}x{m}",
            p.e.nrows(),
            p.e.ncols()
        )));
        shapes_ok = false;
    }
    for d in Direction::BOTH {
        let a = p.constraint(d);
        let f = p.function(d);
        if a.nrows() != m {
            violations.push(Violation::DimensionMismatch(format!(
                "A{} has {} rows, b has length {m}",
                d.index() + 1,
                a.nrows()
            )));
            shapes_ok = false;
        }
        if a.ncols() != f.dim() {
            violations.push(Violation::DimensionMismatch(format!(
                "A{} has {} columns, {d} acts on dimension {}",
                d.index() + 1,
                a.ncols(),
                f.dim()
            )));
            shapes_ok = false;
        }
        for reason in f.defects() {
            violations.push(Violation::InvalidFunction { direction: d, reason });
            shapes_ok = false;
        }
    }

    if p.e.nrows() == m && p.e.ncols() == m {
        if !is_symmetric(&p.e, psd_tolerance(&p.e)) {
            violations.push(Violation::AugmentationNotSymmetric);
        } else if m > 0 {
            let min = min_symmetric_eigenvalue(&p.e);
            if min <= psd_tolerance(&p.e) {
                violations.push(Violation::AugmentationNotPositiveDefinite { min_eigenvalue: min });
            }
        }
    }

    if shapes_ok {
        for d in Direction::BOTH {
            let a = p.constraint(d);
            let shifted = curvature_bounds(p.function(d)).strong + a.transpose() * &p.e * a;
            if shifted.nrows() > 0 {
                let min = min_symmetric_eigenvalue(&shifted);
                if min < -psd_tolerance(&shifted) {
                    violations.push(Violation::NotConvex { direction: d, min_eigenvalue: min });
                }
            }
        }
    }

    ValidationReport { violations }
}
