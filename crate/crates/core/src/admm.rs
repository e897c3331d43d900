//! Relaxed ADMM in scaled variables and its Douglas–Rachford state recursion
//! `z⁺ = (1 − q) z + q D₁(D₂(z))`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::{Direction, SplitProblem};
use crate::prox::SplitOperators;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub q: f64,
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_state: f64,
    /// Keep one [`IterationRecord`] per step.
    pub record_history: bool,
    /// Also copy the iterates into each record.
    pub record_iterates: bool,
    /// Seed for [`AdmmConfig::random_start`].
    pub seed: u64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            q: 1.0,
            max_iters: 1000,
            tol_primal: 1e-12,
            tol_state: 1e-10,
            record_history: true,
            record_iterates: false,
            seed: 0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0.0 || !self.q.is_finite() {
            return Err(Error::InvalidConfig(format!("q must be finite and non-zero, got {}", self.q)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        for (name, tol) in [("tol_primal", self.tol_primal), ("tol_state", self.tol_state)] {
            if !(tol >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {tol}")));
            }
        }
        Ok(())
    }

    /// Standard normal starting state of length `m`, reproducible from `seed`.
    pub fn random_start(&self, m: usize) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(&mut rng)))
    }
}

/// Variables of the scaled iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// `E^½(y − b + λ̃)` with `λ̃` taken before its last update.
    pub z: DVector<f64>,
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub y: DVector<f64>,
    pub lambda_tilde: DVector<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterates {
    pub z: DVector<f64>,
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    /// `‖z⁺ − z‖`.
    pub state_delta: f64,
    /// `‖A₁x₁ − A₂x₂ − b‖` for the primal pair produced by this step.
    pub constraint_residual: f64,
    pub objective: f64,
    pub iterates: Option<Iterates>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StateTolerance,
    PrimalTolerance,
    MaxIterations,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::StateTolerance => "state_tolerance",
            Termination::PrimalTolerance => "primal_tolerance",
            Termination::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub termination: Termination,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub z: DVector<f64>,
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub final_state_delta: f64,
    pub final_residual: f64,
}

impl RunResult {
    pub fn state_deltas(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.state_delta).collect()
    }
}

/// One step of the recursion together with the primal pair it passes through.
struct Step {
    z: DVector<f64>,
    x1: DVector<f64>,
    x2: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct AdmmSolver {
    ops: SplitOperators,
    cfg: AdmmConfig,
}

impl AdmmSolver {
    pub fn new(problem: &SplitProblem, cfg: AdmmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ops: SplitOperators::new(problem)?, cfg })
    }

    pub fn from_operators(ops: SplitOperators, cfg: AdmmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { ops, cfg })
    }

    pub fn operators(&self) -> &SplitOperators {
        &self.ops
    }

    pub fn config(&self) -> &AdmmConfig {
        &self.cfg
    }

    pub fn problem(&self) -> &SplitProblem {
        self.ops.problem()
    }

    fn check_state_len(&self, z: &DVector<f64>) -> Result<()> {
        let m = self.ops.rows();
        if z.len() != m {
            return Err(Error::DimensionMismatch(format!("state has length {}, expected {m}", z.len())));
        }
        Ok(())
    }

    fn step_full(&self, z: &DVector<f64>) -> Result<Step> {
        self.check_state_len(z)?;
        let inv_sqrt = &self.ops.augmentation().inv_sqrt;
        let second = self.ops.context(Direction::Second);
        let first = self.ops.context(Direction::First);
        let x2 = second.prox_point(&(inv_sqrt * z))?;
        let d2 = second.reflected_prox(z)?;
        let x1 = first.prox_point(&(inv_sqrt * &d2))?;
        let d1 = first.reflected_prox(&d2)?;
        let q = self.cfg.q;
        Ok(Step { z: z * (1.0 - q) + d1 * q, x1, x2 })
    }

    /// `(1 − q) z + q D₁(D₂(z))`.
    pub fn step_dr(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.step_full(z)?.z)
    }

    /// One pass of the scaled updates `x₁, y, x₂, λ̃`.
    pub fn step_scaled(&self, s: &AdmmState) -> Result<AdmmState> {
        let p = self.ops.problem();
        let q = self.cfg.q;
        self.check_state_len(&s.lambda_tilde)?;
        let a2x2 = &p.a2 * &s.x2;
        let x1 = self.ops.context(Direction::First).prox_point(&(&a2x2 + &p.b - &s.lambda_tilde))?;
        let y = &p.a1 * &x1 * (2.0 * q) + (&a2x2 + &p.b) * (1.0 - 2.0 * q);
        let shifted = &y - &p.b + &s.lambda_tilde;
        let x2 = self.ops.context(Direction::Second).prox_point(&shifted)?;
        let lambda_tilde = &s.lambda_tilde + &y - &p.a2 * &x2 - &p.b;
        let z = &self.ops.augmentation().sqrt * shifted;
        Ok(AdmmState { z, x1, x2, y, lambda_tilde, iteration: s.iteration + 1 })
    }

    /// Scaled-variable state consistent with `z`: `x₂ = P₂(E^-½z)`,
    /// `λ̃ = E^-½z − A₂x₂`, `y = A₂x₂ + b`, and `x₁` the next first-direction iterate.
    pub fn state_from_z(&self, z: &DVector<f64>) -> Result<AdmmState> {
        let p = self.ops.problem();
        let (x1, x2) = self.recover_primal(z)?;
        let w = &self.ops.augmentation().inv_sqrt * z;
        let a2x2 = &p.a2 * &x2;
        Ok(AdmmState { z: z.clone(), x1, y: &a2x2 + &p.b, lambda_tilde: w - a2x2, x2, iteration: 0 })
    }

    /// `x₂ = P₂(E^-½z)` and `x₁⁺ = P₁(E^-½D₂(z))`.
    pub fn recover_primal(&self, z: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let step = self.step_full(z)?;
        Ok((step.x1, step.x2))
    }

    pub fn run(&self, z0: &DVector<f64>) -> Result<RunResult> {
        self.check_state_len(z0)?;
        let p = self.ops.problem();
        let mut z = z0.clone();
        let mut history = Vec::new();
        let mut delta = f64::INFINITY;
        let mut residual = f64::INFINITY;
        let mut termination = Termination::MaxIterations;
        let mut iterations = 0;

        for k in 0..self.cfg.max_iters {
            let step = self.step_full(&z)?;
            if step.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { iteration: k });
            }
            delta = (&step.z - &z).norm();
            residual = p.constraint_residual(&step.x1, &step.x2).norm();
            iterations = k + 1;
            if self.cfg.record_history {
                history.push(IterationRecord {
                    index: k,
                    state_delta: delta,
                    constraint_residual: residual,
                    objective: p.objective(&step.x1, &step.x2),
                    iterates: self.cfg.record_iterates.then(|| Iterates {
                        z: step.z.clone(),
                        x1: step.x1.clone(),
                        x2: step.x2.clone(),
                    }),
                });
            }
            z = step.z;
            if delta <= self.cfg.tol_state {
                termination = Termination::StateTolerance;
                break;
            }
            if residual <= self.cfg.tol_primal {
                termination = Termination::PrimalTolerance;
                break;
            }
        }

        let (x1, x2) = self.recover_primal(&z)?;
        Ok(RunResult {
            termination,
            iterations,
            history,
            z,
            x1,
            x2,
            final_state_delta: delta,
            final_residual: residual,
        })
    }
}
