//! Proximity and reflected proximity operators of the two directions.
//!
//! `P_i(u) = argmin_x f_i(x) + ½‖A_i x − u‖²_E` and
//! `D_i(u) = 2 E^½ A_i P_i(E^-½ u) − u ∓ E^½ b` (minus for the first direction).

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{is_diagonal, sorted_symmetric_eigen, sqrt_and_inv_sqrt, symmetrize};
use crate::problem::{Direction, PiecewiseLinear1D, SeparableFunction, SplitProblem};
use crate::staircase::{Slope, StaircaseOperator};

/// Junction tolerance used when reading off local slopes.
pub const JUNCTION_TOLERANCE: f64 = 1e-9;

/// `E`, `E^½` and `E^-½`, computed once per problem.
#[derive(Debug, Clone)]
pub struct Augmentation {
    pub e: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
}

impl Augmentation {
    pub fn new(e: &DMatrix<f64>) -> Self {
        let (sqrt, inv_sqrt) = sqrt_and_inv_sqrt(e);
        Self { e: e.clone(), sqrt, inv_sqrt }
    }

    pub fn is_diagonal(&self) -> bool {
        is_diagonal(&self.e)
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    /// `(Q + AᵀEA) x = c + AᵀE u`.
    Linear { chol: Cholesky<f64, Dyn>, c: DVector<f64>, at_e: DMatrix<f64> },
    /// Coordinate-wise 1-D problems `f_j(x) + ½ k_j (x − u_j / a_j)²`, `k_j = e_j a_j²`.
    Separable { scale: DVector<f64>, weight: DVector<f64>, pieces: Vec<PiecewiseLinear1D> },
}

/// The prox machinery of one direction; immutable once built.
#[derive(Debug, Clone)]
pub struct ProxContext {
    direction: Direction,
    a: DMatrix<f64>,
    /// `F = E^½ A`.
    f_map: DMatrix<f64>,
    e_inv_sqrt: DMatrix<f64>,
    /// `∓E^½ b`.
    offset: DVector<f64>,
    kernel: Kernel,
    /// Diagonal of `E` when it is diagonal.
    e_diag: Option<DVector<f64>>,
}

impl ProxContext {
    pub fn new(problem: &SplitProblem, aug: &Augmentation, direction: Direction) -> Result<Self> {
        let f = problem.function(direction);
        let a = problem.constraint(direction);
        let m = problem.rows();
        if a.nrows() != m || a.ncols() != f.dim() || aug.e.nrows() != m {
            return Err(Error::DimensionMismatch(format!("{direction} operator shapes")));
        }

        let kernel = match f {
            SeparableFunction::Quadratic { q, c } => {
                let at_e = a.transpose() * &aug.e;
                let system = symmetrize(&(q + &at_e * a));
                let (vals, _) = sorted_symmetric_eigen(&system);
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(0.0, |m: f64, v| m.max(v.abs()));
                if !vals.is_empty() && min <= 1e-12 * max.max(1.0) {
                    return Err(Error::SingularSystem { min_eigenvalue: min });
                }
                let chol = Cholesky::new(system).ok_or(Error::SingularSystem { min_eigenvalue: min })?;
                Kernel::Linear { chol, c: c.clone(), at_e }
            }
            SeparableFunction::WeightedL1 { .. } | SeparableFunction::PiecewiseLinear { .. } => {
                if !(a.is_square() && is_diagonal(a) && aug.is_diagonal()) {
                    return Err(Error::UnsupportedCombination(format!(
                        "{direction}: separable non-smooth function needs diagonal A and E"
                    )));
                }
                let scale = a.diagonal();
                if scale.iter().any(|&s| s == 0.0) {
                    return Err(Error::UnsupportedCombination(format!("{direction}: zero diagonal entry in A")));
                }
                let weight = aug.e.diagonal().component_mul(&scale.component_mul(&scale));
                let pieces = match f {
                    SeparableFunction::WeightedL1 { weights } => {
                        weights.iter().map(|&w| PiecewiseLinear1D::abs(w)).collect::<Result<Vec<_>>>()?
                    }
                    SeparableFunction::PiecewiseLinear { pieces } => pieces.clone(),
                    SeparableFunction::Quadratic { .. } => unreachable!(),
                };
                Kernel::Separable { scale, weight, pieces }
            }
        };

        let e_half_b = &aug.sqrt * &problem.b;
        let offset = match direction {
            Direction::First => -e_half_b,
            Direction::Second => e_half_b,
        };
        Ok(Self {
            direction,
            a: a.clone(),
            f_map: &aug.sqrt * a,
            e_inv_sqrt: aug.inv_sqrt.clone(),
            offset,
            kernel,
            e_diag: aug.is_diagonal().then(|| aug.e.diagonal()),
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    fn check_len(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} prox input has length {}, expected {}",
                self.direction,
                u.len(),
                self.a.nrows()
            )));
        }
        Ok(())
    }

    /// `argmin_x f(x) + ½‖A x − u‖²_E`.
    pub fn prox_point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        Ok(match &self.kernel {
            Kernel::Linear { chol, c, at_e } => chol.solve(&(c + at_e * u)),
            Kernel::Separable { scale, weight, pieces } => {
                DVector::from_iterator(u.len(), (0..u.len()).map(|j| prox_1d(&pieces[j], weight[j], u[j] / scale[j])))
            }
        })
    }

    /// `2 E^½ A P(E^-½ u) − u ∓ E^½ b`.
    pub fn reflected_prox(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        let x = self.prox_point(&(&self.e_inv_sqrt * u))?;
        Ok(&self.f_map * x * 2.0 - u + &self.offset)
    }

    /// Jacobian of the reflected operator at `u`: exact for quadratics, read off
    /// the staircase segments for separable non-smooth functions.
    pub fn reflected_jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(u)?;
        let m = u.len();
        match &self.kernel {
            Kernel::Linear { chol, .. } => {
                let k_inv_ft = chol.solve(&self.f_map.transpose());
                Ok(&self.f_map * k_inv_ft * 2.0 - DMatrix::identity(m, m))
            }
            Kernel::Separable { .. } => {
                let ops = self.staircases()?;
                let mut diag = DVector::zeros(m);
                // the offset shifts D without changing its slope
                for (j, op) in ops.iter().enumerate() {
                    diag[j] = match op.slope_with_tolerance(u[j], JUNCTION_TOLERANCE * (1.0 + u[j].abs())) {
                        Slope::Single(s) => s,
                        Slope::Junction { .. } => return Err(Error::BreakpointAmbiguity { coordinate: j }),
                    };
                }
                Ok(DMatrix::from_diagonal(&diag))
            }
        }
    }

    /// Per-coordinate staircase operators (separable directions only).
    pub fn staircases(&self) -> Result<Vec<StaircaseOperator>> {
        match (&self.kernel, &self.e_diag) {
            (Kernel::Separable { scale, pieces, .. }, Some(e)) => {
                pieces.iter().enumerate().map(|(j, p)| StaircaseOperator::build(p, scale[j], e[j])).collect()
            }
            _ => {
                Err(Error::UnsupportedCombination(format!("{}: staircase needs a separable function", self.direction)))
            }
        }
    }
}

/// `argmin_x f(x) + ½ k (x − v)²` for convex piecewise-linear `f`, located by
/// bisection over the breakpoints on `v ∈ x + ∂f(x) / k`.
pub fn prox_1d(f: &PiecewiseLinear1D, k: f64, v: f64) -> f64 {
    let xs = f.breakpoints();
    let ms = f.slopes();
    // breakpoint j absorbs v in [x_j + m_j / k, x_j + m_{j+1} / k]
    let (mut lo, mut hi) = (0, xs.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if xs[mid] + ms[mid + 1] / k < v {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let j = lo;
    if j < xs.len() && v >= xs[j] + ms[j] / k {
        return xs[j];
    }
    v - ms[j] / k
}

/// Both reflected operators plus the data they were built from.
#[derive(Debug, Clone)]
pub struct SplitOperators {
    problem: SplitProblem,
    aug: Augmentation,
    first: ProxContext,
    second: ProxContext,
}

impl SplitOperators {
    pub fn new(problem: &SplitProblem) -> Result<Self> {
        problem.validate().into_result()?;
        let aug = Augmentation::new(&problem.e);
        let first = ProxContext::new(problem, &aug, Direction::First)?;
        let second = ProxContext::new(problem, &aug, Direction::Second)?;
        Ok(Self { problem: problem.clone(), aug, first, second })
    }

    pub fn problem(&self) -> &SplitProblem {
        &self.problem
    }

    pub fn augmentation(&self) -> &Augmentation {
        &self.aug
    }

    pub fn context(&self, d: Direction) -> &ProxContext {
        match d {
            Direction::First => &self.first,
            Direction::Second => &self.second,
        }
    }

    pub fn rows(&self) -> usize {
        self.problem.rows()
    }
}
