//! Lipschitz bounds of the reflected proximity operators and the contraction
//! factors they induce on the Douglas–Rachford map.
//!
//! For each direction the slopes of `D_i` are sandwiched between
//! `L_i = F̃ h(S̃) F̃ᵀ − (I − F̃F̃ᵀ)` and `U_i = F̃ h(C̃) F̃ᵀ − (I − F̃F̃ᵀ)`, where
//! `F̃ = E^½ A M^-½`, `S̃ = M^-½ S M^-½`, `C̃ = M^-½ C M^-½` and `M = AᵀEA`.
//! When `S̃` and `C̃` commute both bounds share an orthogonal eigenbasis `V_i`,
//! and the map satisfies `R(u) − R(v) = R(α)(u − v)` with
//! `R(α) = (1−q)I + q V₁ᵀdiag(α₁)V₁ V₂ᵀdiag(α₂)V₂` for some `α_i ∈ [ℓ_i, ν_i]`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    orthogonal_complement, sorted_symmetric_eigen, spectral_norm, spectral_radius, symmetrize, PsdRange,
};
use crate::problem::{curvature_bounds, CurvatureBounds, Direction, Smoothness, SplitProblem};
use crate::prox::Augmentation;

/// Relative cutoff below which eigenvalues of `M` count as zero.
pub const PINV_RTOL: f64 = 1e-12;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

/// `h(x) = (1 − x)/(1 + x)` with `h(∞) = −1` and `h(−1) = ∞`.
pub fn h_map(x: Extended) -> Extended {
    match x {
        Extended::Infinite => Extended::Finite(-1.0),
        Extended::Finite(-1.0) => Extended::Infinite,
        Extended::Finite(v) => Extended::Finite(h(v)),
    }
}

/// Finite branch of [`h_map`].
pub fn h(x: f64) -> f64 {
    (1.0 - x) / (1.0 + x)
}

/// `S̃` is either a matrix or unbounded in every direction.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaledSmoothness {
    Bounded(DMatrix<f64>),
    Unbounded,
}

/// Scaled operators of one direction.
#[derive(Debug, Clone)]
pub struct DirectionModel {
    /// `F = E^½ A`.
    pub f_map: DMatrix<f64>,
    /// `M = AᵀEA`.
    pub m: DMatrix<f64>,
    pub m_inv_sqrt: DMatrix<f64>,
    /// `F̃ = F M^-½`.
    pub f_tilde: DMatrix<f64>,
    pub s_tilde: ScaledSmoothness,
    pub c_tilde: DMatrix<f64>,
    pub rank: usize,
    /// Orthonormal `m×r` frame spanning the range of `F̃`.
    frame: DMatrix<f64>,
    /// `S̃` and `C̃` in the frame coordinates (`r×r`).
    s_reduced: ScaledSmoothness,
    c_reduced: DMatrix<f64>,
}

impl DirectionModel {
    pub fn new(a: &DMatrix<f64>, e_sqrt: &DMatrix<f64>, bounds: &CurvatureBounds) -> Self {
        let f_map = e_sqrt * a;
        let m = symmetrize(&(f_map.transpose() * &f_map));
        let range = PsdRange::new(&m, PINV_RTOL);
        let m_inv_sqrt = range.pinv_sqrt();
        let f_tilde = &f_map * &m_inv_sqrt;

        // W_r diag(v^-½) maps reduced coordinates into the domain
        let lift = &range.basis * DMatrix::from_diagonal(&range.values.map(|x| 1.0 / libm::sqrt(x)));
        let frame = &f_map * &lift;
        let reduce = |x: &DMatrix<f64>| symmetrize(&(lift.transpose() * x * &lift));

        let c_tilde = symmetrize(&(&m_inv_sqrt * &bounds.strong * &m_inv_sqrt));
        let c_reduced = reduce(&bounds.strong);
        let (s_tilde, s_reduced) = match &bounds.smooth {
            Smoothness::Unbounded => (ScaledSmoothness::Unbounded, ScaledSmoothness::Unbounded),
            Smoothness::Bounded(s) => (
                ScaledSmoothness::Bounded(symmetrize(&(&m_inv_sqrt * s * &m_inv_sqrt))),
                ScaledSmoothness::Bounded(reduce(s)),
            ),
        };
        Self { f_map, m, m_inv_sqrt, f_tilde, s_tilde, c_tilde, rank: range.rank(), frame, s_reduced, c_reduced }
    }

    pub fn ambient_dim(&self) -> usize {
        self.f_map.nrows()
    }

    /// `F̃F̃ᵀ`, the orthogonal projector onto the range of `A` (in `E^½` coordinates).
    pub fn projector(&self) -> DMatrix<f64> {
        &self.f_tilde * self.f_tilde.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub first: DirectionModel,
    pub second: DirectionModel,
}

impl SpectralModel {
    pub fn direction(&self, d: Direction) -> &DirectionModel {
        match d {
            Direction::First => &self.first,
            Direction::Second => &self.second,
        }
    }
}

pub fn build_spectral_model(p: &SplitProblem) -> Result<SpectralModel> {
    p.validate().into_result()?;
    let aug = Augmentation::new(&p.e);
    Ok(SpectralModel {
        first: DirectionModel::new(&p.a1, &aug.sqrt, &curvature_bounds(&p.f1)),
        second: DirectionModel::new(&p.a2, &aug.sqrt, &curvature_bounds(&p.f2)),
    })
}

/// Eigenvalues of `L_i` (`lower`) and `U_i` (`upper`) in the shared basis whose
/// rows are the rows of `basis`, i.e. `L_i = basisᵀ diag(lower) basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSpectrum {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub basis: DMatrix<f64>,
    /// Trailing entries fixed at −1 by the kernel of `Aᵀ`.
    pub kernel_count: usize,
}

impl DirectionSpectrum {
    pub fn lower_matrix(&self) -> DMatrix<f64> {
        self.basis.transpose() * DMatrix::from_diagonal(&self.lower) * &self.basis
    }

    pub fn upper_matrix(&self) -> DMatrix<f64> {
        self.basis.transpose() * DMatrix::from_diagonal(&self.upper) * &self.basis
    }

    pub fn min_lower(&self) -> f64 {
        self.lower.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_upper(&self) -> f64 {
        self.upper.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpectrum {
    pub first: DirectionSpectrum,
    pub second: DirectionSpectrum,
}

impl BoundSpectrum {
    pub fn direction(&self, d: Direction) -> &DirectionSpectrum {
        match d {
            Direction::First => &self.first,
            Direction::Second => &self.second,
        }
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    /// `N(α) = V₁ᵀdiag(α₁)V₁ V₂ᵀdiag(α₂)V₂`.
    pub fn product(&self, alpha1: &DVector<f64>, alpha2: &DVector<f64>) -> DMatrix<f64> {
        let v1 = &self.first.basis;
        let v2 = &self.second.basis;
        v1.transpose() * DMatrix::from_diagonal(alpha1) * v1 * v2.transpose() * DMatrix::from_diagonal(alpha2) * v2
    }

    /// `R(α) = (1−q)I + q N(α)`.
    pub fn iteration_matrix(&self, q: f64, alpha1: &DVector<f64>, alpha2: &DVector<f64>) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::identity(m, m) * (1.0 - q) + self.product(alpha1, alpha2) * q
    }
}

fn commute_check(s: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<()> {
    let residual = (s * c - c * s).norm();
    let scale = 1.0 + s.norm() * c.norm();
    if residual > 1e-9 * scale {
        return Err(Error::NonCommuting { residual });
    }
    Ok(())
}

/// Common eigenbasis of commuting symmetric `s` (possibly unbounded) and `c`.
/// Returns (basis columns, eigenvalues of s or None for ∞, eigenvalues of c).
fn joint_diagonalize(s: &ScaledSmoothness, c: &DMatrix<f64>) -> (DMatrix<f64>, Vec<Extended>, Vec<f64>) {
    let r = c.nrows();
    let (s_vals, y) = match s {
        ScaledSmoothness::Unbounded => (alloc::vec![Extended::Infinite; r], DMatrix::identity(r, r)),
        ScaledSmoothness::Bounded(s) => {
            let (vals, vecs) = sorted_symmetric_eigen(s);
            (vals.iter().map(|&v| Extended::Finite(v)).collect(), vecs)
        }
    };
    // refine inside each cluster of (numerically) equal s-eigenvalues
    let scale = 1.0
        + c.amax().max(match s {
            ScaledSmoothness::Bounded(s) => s.amax(),
            ScaledSmoothness::Unbounded => 0.0,
        });
    let mut basis = y.clone();
    let mut c_vals = alloc::vec![0.0; r];
    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && same_cluster(s_vals[start], s_vals[end], 1e-9 * scale) {
            end += 1;
        }
        let block = y.columns(start, end - start).into_owned();
        let restricted = symmetrize(&(block.transpose() * c * &block));
        let (vals, vecs) = sorted_symmetric_eigen(&restricted);
        let rotated = &block * vecs;
        for k in 0..(end - start) {
            basis.set_column(start + k, &rotated.column(k));
            c_vals[start + k] = vals[k];
        }
        start = end;
    }
    (basis, s_vals, c_vals)
}

fn same_cluster(a: Extended, b: Extended, tol: f64) -> bool {
    match (a, b) {
        (Extended::Infinite, Extended::Infinite) => true,
        (Extended::Finite(x), Extended::Finite(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}

fn direction_spectrum(model: &DirectionModel) -> Result<DirectionSpectrum> {
    if let ScaledSmoothness::Bounded(s) = &model.s_reduced {
        commute_check(s, &model.c_reduced)?;
    }
    let m = model.ambient_dim();
    let r = model.rank;
    let (y, s_vals, c_vals) = joint_diagonalize(&model.s_reduced, &model.c_reduced);

    let mut lower = DVector::from_element(m, -1.0);
    let mut upper = DVector::from_element(m, -1.0);
    for k in 0..r {
        lower[k] = match h_map(s_vals[k]) {
            Extended::Finite(v) => v,
            Extended::Infinite => return Err(Error::UnboundedSlope),
        };
        // C̃ ⪰ −I; an eigenvalue at (or numerically below) −1 gives an unbounded slope
        if c_vals[k] <= -1.0 + 1e-12 {
            return Err(Error::UnboundedSlope);
        }
        upper[k] = h(c_vals[k]);
    }

    let span = &model.frame * y;
    let kernel = orthogonal_complement(&model.frame);
    let mut basis = DMatrix::zeros(m, m);
    for k in 0..r {
        basis.set_row(k, &span.column(k).transpose());
    }
    for k in 0..(m - r) {
        basis.set_row(r + k, &kernel.column(k).transpose());
    }
    Ok(DirectionSpectrum { lower, upper, basis, kernel_count: m - r })
}

pub fn bound_spectrum(sm: &SpectralModel) -> Result<BoundSpectrum> {
    Ok(BoundSpectrum { first: direction_spectrum(&sm.first)?, second: direction_spectrum(&sm.second)? })
}

/// `μ_i = max(−ℓ_min, ν_max)`.
pub fn mu_single(bs: &BoundSpectrum, d: Direction) -> f64 {
    let ds = bs.direction(d);
    (-ds.min_lower()).max(ds.max_upper())
}

/// `μ̃ = (1 − q) + q μ₁ μ₂`, the bound obtained from the two operators separately.
pub fn mu_separable(bs: &BoundSpectrum, q: f64) -> f64 {
    (1.0 - q) + q * mu_single(bs, Direction::First) * mu_single(bs, Direction::Second)
}

/// Search settings for [`mu_joint`] when vertex enumeration is too large.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointSearch {
    /// Exact enumeration when the number of free coordinates is at most this.
    pub max_exact_coordinates: usize,
    pub starts: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for JointSearch {
    fn default() -> Self {
        Self { max_exact_coordinates: 16, starts: 32, samples: 1024, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointContraction {
    pub mu: f64,
    /// `false` when the value comes from the heuristic search (a lower bound on μ).
    pub exact: bool,
    pub alpha1: DVector<f64>,
    pub alpha2: DVector<f64>,
}

/// The slope box with coordinates flattened over both directions.
struct FlatBox<'a> {
    bs: &'a BoundSpectrum,
    free: Vec<(usize, usize)>,
}

impl<'a> FlatBox<'a> {
    fn new(bs: &'a BoundSpectrum) -> Self {
        let mut free = Vec::new();
        for (d, ds) in [&bs.first, &bs.second].into_iter().enumerate() {
            for k in 0..ds.dim() {
                let (lo, hi) = (ds.lower[k], ds.upper[k]);
                if hi - lo > 1e-15 * (1.0 + hi.abs()) {
                    free.push((d, k));
                }
            }
        }
        Self { bs, free }
    }

    fn base(&self) -> [DVector<f64>; 2] {
        [self.bs.first.lower.clone(), self.bs.second.lower.clone()]
    }

    fn set(&self, alpha: &mut [DVector<f64>; 2], idx: usize, high: bool) {
        let (d, k) = self.free[idx];
        let ds = if d == 0 { &self.bs.first } else { &self.bs.second };
        alpha[d][k] = if high { ds.upper[k] } else { ds.lower[k] };
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> [DVector<f64>; 2] {
        let mut alpha = self.base();
        for &(d, k) in &self.free {
            let ds = if d == 0 { &self.bs.first } else { &self.bs.second };
            let t: f64 = rng.random();
            alpha[d][k] = ds.lower[k] + t * (ds.upper[k] - ds.lower[k]);
        }
        alpha
    }
}

/// `μ = max ‖R(α)‖` over `α_i ∈ [ℓ_i, ν_i]`.
///
/// `‖R(α)‖` is convex in `α₁` for fixed `α₂` and vice versa, so the maximum sits
/// on a vertex pair; vertices are enumerated when there are at most
/// `search.max_exact_coordinates` free coordinates. Beyond that, coordinate ascent
/// over vertices from random starts plus interior samples gives a lower bound.
pub fn mu_joint(bs: &BoundSpectrum, q: f64, search: &JointSearch) -> JointContraction {
    let norm = |a: &[DVector<f64>; 2]| spectral_norm(&bs.iteration_matrix(q, &a[0], &a[1]));
    maximize_over_box(bs, search, norm)
}

/// Largest spectral radius of `R(α)` found over the vertices (when enumerable)
/// and random interior samples; a lower estimate of `max ρ(R(α))`.
pub fn rho_joint(bs: &BoundSpectrum, q: f64, search: &JointSearch) -> JointContraction {
    let rho = |a: &[DVector<f64>; 2]| spectral_radius(&bs.iteration_matrix(q, &a[0], &a[1]));
    let mut out = maximize_over_box(bs, search, rho);
    // ρ is not convex, so vertices alone are not conclusive
    let flat = FlatBox::new(bs);
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ 0x5eed);
    for _ in 0..search.samples {
        let a = flat.sample(&mut rng);
        let v = rho(&a);
        if v > out.mu {
            out.mu = v;
            [out.alpha1, out.alpha2] = a;
        }
    }
    out.exact = false;
    out
}

fn maximize_over_box<F>(bs: &BoundSpectrum, search: &JointSearch, objective: F) -> JointContraction
where
    F: Fn(&[DVector<f64>; 2]) -> f64,
{
    let flat = FlatBox::new(bs);
    let n = flat.free.len();
    let mut best_alpha = flat.base();
    let mut best = objective(&best_alpha);

    if n <= search.max_exact_coordinates && n < 64 {
        for mask in 1u64..(1u64 << n) {
            let mut alpha = flat.base();
            for idx in 0..n {
                flat.set(&mut alpha, idx, mask >> idx & 1 == 1);
            }
            let v = objective(&alpha);
            if v > best {
                best = v;
                best_alpha = alpha;
            }
        }
        let [alpha1, alpha2] = best_alpha;
        return JointContraction { mu: best, exact: true, alpha1, alpha2 };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.starts {
        let mut bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let mut alpha = flat.base();
        for (idx, &b) in bits.iter().enumerate() {
            flat.set(&mut alpha, idx, b);
        }
        let mut current = objective(&alpha);
        for _pass in 0..50 {
            let mut improved = false;
            for idx in 0..n {
                flat.set(&mut alpha, idx, !bits[idx]);
                let v = objective(&alpha);
                if v > current * (1.0 + 1e-14) {
                    current = v;
                    bits[idx] = !bits[idx];
                    improved = true;
                } else {
                    flat.set(&mut alpha, idx, bits[idx]);
                }
            }
            if !improved {
                break;
            }
        }
        if current > best {
            best = current;
            best_alpha = alpha;
        }
    }
    for _ in 0..search.samples {
        let alpha = flat.sample(&mut rng);
        let v = objective(&alpha);
        if v > best {
            best = v;
            best_alpha = alpha;
        }
    }
    let [alpha1, alpha2] = best_alpha;
    JointContraction { mu: best, exact: false, alpha1, alpha2 }
}

/// Slope ranges `α_{i,j} ∈ [−n_max, −n_min] ∪ [p_min, p_max]` of one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRange {
    pub n_max: f64,
    pub n_min: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl SlopeRange {
    pub fn new(n_max: f64, n_min: f64, p_min: f64, p_max: f64) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo >= 0.0 && lo <= hi && hi.is_finite();
        if !(ok(n_min, n_max) && ok(p_min, p_max)) {
            return Err(Error::InvalidInput(alloc::format!(
                "slope range needs 0 <= n_min <= n_max and 0 <= p_min <= p_max, got n=[{n_min}, {n_max}] p=[{p_min}, {p_max}]"
            )));
        }
        Ok(Self { n_max, n_min, p_min, p_max })
    }

    /// The smallest range covering every interval `[lo_k, hi_k]`.
    pub fn covering(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        let pos = |x: f64| x.max(0.0);
        let p_max = hi.iter().copied().map(pos).fold(0.0, f64::max);
        let n_max = lo.iter().copied().map(|x| pos(-x)).fold(0.0, f64::max);
        let straddles = lo.iter().zip(hi.iter()).any(|(&l, &h)| l <= 0.0 && h >= 0.0);
        let (p_min, n_min) = if straddles {
            (0.0, 0.0)
        } else {
            let p = lo.iter().copied().filter(|&l| l > 0.0).fold(f64::INFINITY, f64::min);
            let n = hi.iter().copied().filter(|&h| h < 0.0).map(|h| -h).fold(f64::INFINITY, f64::min);
            (if p.is_finite() { p } else { 0.0 }, if n.is_finite() { n } else { 0.0 })
        };
        Self { n_max, n_min, p_min, p_max }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (alpha >= -self.n_max && alpha <= -self.n_min) || (alpha >= self.p_min && alpha <= self.p_max)
    }

    /// Uniform draw over the union (by length; degenerate ranges handled).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let neg = self.n_max - self.n_min;
        let pos = self.p_max - self.p_min;
        let total = neg + pos;
        if total <= 0.0 {
            return if rng.random::<bool>() { self.p_max } else { -self.n_max };
        }
        let t = rng.random::<f64>() * total;
        if t < neg {
            -self.n_max + t
        } else {
            self.p_min + (t - neg)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBox {
    pub first: SlopeRange,
    pub second: SlopeRange,
}

impl AlphaBox {
    pub fn from_spectrum(bs: &BoundSpectrum) -> Self {
        Self {
            first: SlopeRange::covering(&bs.first.lower, &bs.first.upper),
            second: SlopeRange::covering(&bs.second.lower, &bs.second.upper),
        }
    }

    pub fn direction(&self, d: Direction) -> &SlopeRange {
        match d {
            Direction::First => &self.first,
            Direction::Second => &self.second,
        }
    }
}

/// Optimal tuning for `C₁ = 0, S₁ = βI, C₂ = σI, S₂ = ∞, A₁ = A₂ = I, E = γI`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarTuning {
    pub gamma: f64,
    pub q: f64,
    pub mu: f64,
    /// Upper end of the product range `α₁α₂` at the optimal `γ`.
    pub h1: f64,
}

pub fn optimal_scalar_tuning(sigma: f64, beta: f64) -> ScalarTuning {
    let gamma = libm::sqrt(sigma * beta);
    let t = libm::sqrt(sigma / beta);
    let h1 = if sigma <= beta { 2.0 / (1.0 + t) - 1.0 } else { 2.0 / (1.0 + 0.5 * t + 0.5 / t) - 1.0 };
    let q = 2.0 / (3.0 - h1);
    let mu = if sigma <= beta { 1.0 / (1.0 + 2.0 * t) } else { 1.0 / (1.0 + t + 1.0 / t) };
    ScalarTuning { gamma, q, mu, h1 }
}
