//! Weighted Lasso benchmark `min ½‖Ωx − o‖² + ‖w∘x‖₁` split as `x₁ = x₂`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::admm::{AdmmConfig, AdmmSolver, Termination};
use crate::contraction::{
    bound_spectrum, build_spectral_model, h, mu_joint, mu_separable, AlphaBox, JointSearch, SlopeRange,
};
use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;
use crate::locus::{LocusParams, OptimalRelaxation};
use crate::problem::{SeparableFunction, SplitProblem};
use crate::rate::{fit_rate, local_jacobian};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub rows: usize,
    pub cols: usize,
    /// Active entries per row of `Ω`.
    pub nnz: usize,
    pub eps: f64,
    pub seed: u64,
}

impl LassoConfig {
    /// 300×200 with 10 active entries per row.
    pub fn paper_scale(seed: u64) -> Self {
        Self { rows: 300, cols: 200, nnz: 10, eps: 1.0, seed }
    }

    /// 90×60 with 10 active entries per row.
    pub fn desk_scale(seed: u64) -> Self {
        Self { rows: 90, cols: 60, nnz: 10, eps: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidInput("rows and cols must be at least 1".into()));
        }
        if self.nnz == 0 || self.nnz > self.cols {
            return Err(Error::InvalidInput(format!("nnz must be in 1..={}, got {}", self.cols, self.nnz)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self::desk_scale(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoInstance {
    pub config: LassoConfig,
    pub omega: DMatrix<f64>,
    pub target: DVector<f64>,
    pub weights: DVector<f64>,
    pub problem: SplitProblem,
}

impl LassoInstance {
    pub fn generate(config: LassoConfig) -> Result<Self> {
        config.validate()?;
        let LassoConfig { rows, cols, nnz, eps, seed } = config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut omega = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let mut active: Vec<usize> = sample(&mut rng, cols, nnz).into_vec();
            active.sort_unstable();
            for c in active {
                omega[(r, c)] = rng.sample(StandardNormal);
            }
        }
        let target = DVector::from_iterator(rows, (0..rows).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let weights = DVector::from_iterator(cols, (0..cols).map(|_| rng.random::<f64>()));

        let problem = SplitProblem {
            f1: SeparableFunction::Quadratic { q: omega.transpose() * &omega, c: omega.transpose() * &target },
            f2: SeparableFunction::WeightedL1 { weights: weights.clone() },
            a1: DMatrix::identity(cols, cols),
            a2: DMatrix::identity(cols, cols),
            b: DVector::zeros(cols),
            e: DMatrix::identity(cols, cols) * eps,
        };
        Ok(Self { config, omega, target, weights, problem })
    }

    /// `½‖Ωx − o‖² + ‖w∘x‖₁`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.omega * x - &self.target).norm_squared() + self.weights.component_mul(x).abs().sum()
    }

    /// Smallest and largest eigenvalue of `ΩᵀΩ`.
    pub fn gram_extremes(&self) -> (f64, f64) {
        let (vals, _) = sorted_symmetric_eigen(&(self.omega.transpose() * &self.omega));
        (vals[0].max(0.0), vals[vals.len() - 1])
    }
}

/// Slope range of the quadratic direction for Gram eigenvalues in `[λmin, λmax]`.
pub fn quadratic_slope_range(lambda_min: f64, lambda_max: f64, eps: f64) -> SlopeRange {
    let pos = |x: f64| x.max(0.0);
    SlopeRange {
        p_max: pos(h(lambda_min / eps)),
        n_max: pos(-h(lambda_max / eps)),
        p_min: pos(h(lambda_max / eps)),
        n_min: pos(-h(lambda_min / eps)),
    }
}

/// The soft-threshold direction moves between slopes −1 and 1 anywhere.
pub fn threshold_slope_range() -> SlopeRange {
    SlopeRange { n_max: 1.0, n_min: 0.0, p_min: 0.0, p_max: 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub alpha_box: AlphaBox,
    pub params: LocusParams,
}

pub fn lasso_bounds(inst: &LassoInstance) -> LassoBounds {
    let (lambda_min, lambda_max) = inst.gram_extremes();
    let alpha_box = AlphaBox {
        first: quadratic_slope_range(lambda_min, lambda_max, inst.config.eps),
        second: threshold_slope_range(),
    };
    LassoBounds { lambda_min, lambda_max, alpha_box, params: LocusParams::from_box(&alpha_box) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Relaxation; `None` picks the locus-optimal value.
    pub q: Option<f64>,
    pub max_iters: usize,
    pub tol_state: f64,
    pub search: JointSearch,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: None,
            max_iters: 5000,
            tol_state: 1e-12,
            search: JointSearch { starts: 4, samples: 64, ..JointSearch::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub bounds: LassoBounds,
    pub optimal: OptimalRelaxation,
    pub q: f64,
    pub rho_max: f64,
    pub mu: f64,
    pub mu_exact: bool,
    pub mu_separable: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub state_deltas: Vec<f64>,
    pub empirical_rate: Option<f64>,
    pub local_eigs: Vec<Complex<f64>>,
    pub local_iteration_eigs: Vec<Complex<f64>>,
    pub max_real_local_eig: Option<f64>,
    pub solution: DVector<f64>,
    pub objective: f64,
    pub locus_ok: bool,
    pub rate_ok: bool,
}

/// Tolerance of the containment check on the local eigenvalues.
pub const LOCUS_TOL: f64 = 1e-8;
/// Slack allowed between the fitted rate and `ρ_max`.
pub const RATE_SLACK: f64 = 0.02;

/// Solves the instance to a tight state tolerance, then compares the measured
/// rate and the local Jacobian spectrum with the predicted locus.
pub fn run_experiment(inst: &LassoInstance, cfg: &ExperimentConfig) -> Result<RateReport> {
    let bounds = lasso_bounds(inst);
    let optimal = bounds.params.optimal_q();
    let q = match cfg.q {
        Some(q) => q,
        None if optimal.convergent => optimal.q,
        None => 1.0,
    };
    let rho_max = bounds.params.rho_max(q);

    let spectrum = bound_spectrum(&build_spectral_model(&inst.problem)?)?;
    let joint = mu_joint(&spectrum, q, &cfg.search);

    let admm =
        AdmmConfig { q, max_iters: cfg.max_iters, tol_state: cfg.tol_state, tol_primal: 0.0, ..AdmmConfig::default() };
    let solver = AdmmSolver::new(&inst.problem, admm)?;
    let run = solver.run(&DVector::zeros(inst.config.cols))?;
    let state_deltas = run.state_deltas();
    let empirical_rate = fit_rate(&state_deltas).ok();
    let local = local_jacobian(&solver, &run.z)?;

    let locus = bounds.params.locus();
    let locus_ok = local.product_eigs.iter().all(|&z| locus.contains(z, LOCUS_TOL));
    let rate_ok = empirical_rate.is_some_and(|r| r <= rho_max + RATE_SLACK);
    Ok(RateReport {
        bounds,
        optimal,
        q,
        rho_max,
        mu: joint.mu,
        mu_exact: joint.exact,
        mu_separable: mu_separable(&spectrum, q),
        termination: run.termination,
        iterations: run.iterations,
        state_deltas,
        empirical_rate,
        max_real_local_eig: local.max_real_product_eig(),
        local_eigs: local.product_eigs,
        local_iteration_eigs: local.iteration_eigs,
        objective: inst.objective(&run.x2),
        solution: run.x2,
        locus_ok,
        rate_ok,
    })
}
