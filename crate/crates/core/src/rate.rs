//! Empirical convergence rates and the local linearisation at a limit point.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::admm::AdmmSolver;
use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::problem::Direction;

/// Deltas at or below this are treated as converged noise.
pub const DELTA_FLOOR: f64 = 1e-13;
pub const MIN_USABLE: usize = 20;

/// Geometric rate fitted to a sequence of step lengths `‖z_k − z_{k−1}‖`.
///
/// Only the leading run of deltas above [`DELTA_FLOOR`] is used; the rate is
/// `exp(slope)` of a least-squares line through `ln δ_k` over its last third.
pub fn fit_rate(deltas: &[f64]) -> Result<f64> {
    let usable = deltas.iter().take_while(|&&d| d.is_finite() && d > DELTA_FLOOR).count();
    if usable < MIN_USABLE {
        return Err(Error::InsufficientHistory { usable });
    }
    let start = usable - usable / 3;
    let pts: Vec<(f64, f64)> = (start..usable).map(|k| (k as f64, libm::log(deltas[k]))).collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    Ok(libm::exp(sxy / sxx))
}

/// Linearisation of the recursion at a point: `N = J₁(D₂(z)) J₂(z)` and
/// `R = (1 − q)I + qN`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalJacobian {
    pub product: DMatrix<f64>,
    pub iteration: DMatrix<f64>,
    pub product_eigs: Vec<Complex<f64>>,
    pub iteration_eigs: Vec<Complex<f64>>,
}

impl LocalJacobian {
    pub fn spectral_radius(&self) -> f64 {
        self.iteration_eigs.iter().map(|z| libm::hypot(z.re, z.im)).fold(0.0, f64::max)
    }

    /// Largest real eigenvalue of `N` (those with `|Im| ≤ 1e-9(1 + |λ|)`).
    pub fn max_real_product_eig(&self) -> Option<f64> {
        self.product_eigs
            .iter()
            .filter(|z| z.im.abs() <= 1e-9 * (1.0 + libm::hypot(z.re, z.im)))
            .map(|z| z.re)
            .reduce(f64::max)
    }
}

pub fn local_jacobian(solver: &AdmmSolver, z: &DVector<f64>) -> Result<LocalJacobian> {
    let ops = solver.operators();
    let second = ops.context(Direction::Second);
    let first = ops.context(Direction::First);
    let j2 = second.reflected_jacobian(z)?;
    let j1 = first.reflected_jacobian(&second.reflected_prox(z)?)?;
    let product = j1 * j2;
    let m = product.nrows();
    let q = solver.config().q;
    let iteration = DMatrix::identity(m, m) * (1.0 - q) + &product * q;
    Ok(LocalJacobian {
        product_eigs: eigenvalues(&product),
        iteration_eigs: eigenvalues(&iteration),
        product,
        iteration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_geometric_sequence() {
        let deltas: Vec<f64> = (0..60).map(|k| 0.9f64.powi(k)).collect();
        assert!((fit_rate(&deltas).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn floor_truncates() {
        let mut deltas: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        // 0.5^40 ≈ 9e-13 stays above the floor; append noise below it
        deltas.extend([1e-14, 3e-14, 5e-12, 1e-15]);
        let rate = fit_rate(&deltas).unwrap();
        assert!((rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_history_rejected() {
        let deltas = vec![1.0; 19];
        assert!(matches!(fit_rate(&deltas), Err(Error::InsufficientHistory { usable: 19 })));
        let deltas = vec![1.0, 0.0, 1.0];
        assert!(matches!(fit_rate(&deltas), Err(Error::InsufficientHistory { usable: 1 })));
    }
}
