//! Eigenvalue locus of `N(α) = V₁ᵀdiag(α₁)V₁ V₂ᵀdiag(α₂)V₂`.
//!
//! When every `α_{i,j}` takes one of two values `{p_i, −n_i}` the eigenvalues are
//! known in closed form from the singular values of one block of `G = V₂V₁ᵀ`.
//! For general slope ranges the real eigenvalues lie in `[−n̄, −n̲] ∪ [p̲, p̄]` and
//! the complex ones in the annulus `r̲ ≤ |λ| ≤ r̄`. The iteration matrix
//! `R = (1 − q)I + qN` moves the locus by `λ ↦ (1 − q) + qλ`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::contraction::AlphaBox;
use crate::error::{Error, Result};
use crate::linalg::modulus;

/// Orthogonality tolerance on `‖GᵀG − I‖` (max entry).
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Magnitudes of the two slope levels in each direction: direction `i` takes the
/// values `p_i` and `−n_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Levels {
    pub p1: f64,
    pub n1: f64,
    pub p2: f64,
    pub n2: f64,
}

/// How many coordinates of each direction take the positive / negative level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub p1: usize,
    pub n1: usize,
    pub p2: usize,
    pub n2: usize,
}

impl Counts {
    pub fn dim(&self) -> usize {
        self.p1 + self.n1
    }

    /// `p₂ ≤ p₁ ≤ n₁ ≤ n₂`.
    pub fn is_canonical(&self) -> bool {
        self.p2 <= self.p1 && self.p1 <= self.n1 && self.n1 <= self.n2
    }
}

/// Two-level slope pattern in both directions, with `N ~ G H₁ Gᵀ H₂` where
/// `H_i = diag(p_i I, −n_i I)` (positive coordinates first).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpec {
    pub levels: Levels,
    pub counts: Counts,
    pub g: DMatrix<f64>,
}

impl LevelSpec {
    pub fn new(levels: Levels, counts: Counts, g: DMatrix<f64>) -> Result<Self> {
        let m = g.nrows();
        if !g.is_square() || counts.p1 + counts.n1 != m || counts.p2 + counts.n2 != m {
            return Err(Error::DegenerateCounts(format!(
                "counts {counts:?} do not split a {}x{} matrix",
                g.nrows(),
                g.ncols()
            )));
        }
        for v in [levels.p1, levels.n1, levels.p2, levels.n2] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("levels must be finite and non-negative, got {levels:?}")));
            }
        }
        check_orthogonal(&g)?;
        Ok(Self { levels, counts, g })
    }

    /// Builds `G = V₂V₁ᵀ` from the two eigenbases (rows are eigenvectors, positive
    /// coordinates first).
    pub fn from_bases(levels: Levels, counts: Counts, v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<Self> {
        Self::new(levels, counts, v2 * v1.transpose())
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn first_levels(&self) -> DVector<f64> {
        level_diagonal(self.levels.p1, self.counts.p1, self.levels.n1, self.counts.n1)
    }

    pub fn second_levels(&self) -> DVector<f64> {
        level_diagonal(self.levels.p2, self.counts.p2, self.levels.n2, self.counts.n2)
    }

    /// `G H₁ Gᵀ H₂`, similar to `N`.
    pub fn product_matrix(&self) -> DMatrix<f64> {
        &self.g
            * DMatrix::from_diagonal(&self.first_levels())
            * self.g.transpose()
            * DMatrix::from_diagonal(&self.second_levels())
    }

    /// Same spectrum, negated, with the first direction's levels swapped.
    fn swap_first(&self) -> Self {
        let (p, n) = (self.counts.p1, self.counts.n1);
        let m = self.dim();
        let mut g = DMatrix::zeros(m, m);
        g.columns_mut(0, n).copy_from(&self.g.columns(p, n));
        g.columns_mut(n, p).copy_from(&self.g.columns(0, p));
        Self {
            levels: Levels { p1: self.levels.n1, n1: self.levels.p1, ..self.levels },
            counts: Counts { p1: n, n1: p, ..self.counts },
            g,
        }
    }

    /// Same spectrum, negated, with the second direction's levels swapped.
    fn swap_second(&self) -> Self {
        let (p, n) = (self.counts.p2, self.counts.n2);
        let m = self.dim();
        let mut g = DMatrix::zeros(m, m);
        g.rows_mut(0, n).copy_from(&self.g.rows(p, n));
        g.rows_mut(n, p).copy_from(&self.g.rows(0, p));
        Self {
            levels: Levels { p2: self.levels.n2, n2: self.levels.p2, ..self.levels },
            counts: Counts { p2: n, n2: p, ..self.counts },
            g,
        }
    }

    /// Same spectrum with the directions exchanged (`G → Gᵀ`).
    fn transposed(&self) -> Self {
        let l = self.levels;
        let c = self.counts;
        Self {
            levels: Levels { p1: l.p2, n1: l.n2, p2: l.p1, n2: l.n1 },
            counts: Counts { p1: c.p2, n1: c.n2, p2: c.p1, n2: c.n1 },
            g: self.g.transpose(),
        }
    }

    /// Equivalent spec with `p₂ ≤ p₁ ≤ n₁ ≤ n₂` and the sign relating its spectrum
    /// to this one.
    pub fn canonical(&self) -> Reduction {
        let c = self.counts;
        let transposed = c.p1.min(c.n1) < c.p2.min(c.n2);
        let mut spec = if transposed { self.transposed() } else { self.clone() };
        let mut sign = 1.0;
        let swapped_second = spec.counts.n2 < spec.counts.p2;
        if swapped_second {
            spec = spec.swap_second();
            sign = -sign;
        }
        let swapped_first = spec.counts.n1 < spec.counts.p1;
        if swapped_first {
            spec = spec.swap_first();
            sign = -sign;
        }
        Reduction { spec, sign, transposed, swapped_first, swapped_second }
    }
}

fn level_diagonal(pos: f64, np: usize, neg: f64, nn: usize) -> DVector<f64> {
    DVector::from_iterator(np + nn, (0..np).map(|_| pos).chain((0..nn).map(|_| -neg)))
}

pub(crate) fn check_orthogonal(g: &DMatrix<f64>) -> Result<()> {
    let m = g.nrows();
    let residual = (g.transpose() * g - DMatrix::identity(m, m)).amax();
    if !(residual <= ORTHOGONALITY_TOL) {
        return Err(Error::NotOrthogonal { residual });
    }
    Ok(())
}

/// A spec brought to canonical ordering. Eigenvalues of the original equal
/// `sign` times those of `spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub spec: LevelSpec,
    pub sign: f64,
    pub transposed: bool,
    pub swapped_first: bool,
    pub swapped_second: bool,
}

/// Constants describing the locus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusParams {
    /// Largest magnitude of a negative real eigenvalue: `max(p̄₁n̄₂, n̄₁p̄₂)`.
    pub n_max: f64,
    /// Largest positive real eigenvalue: `max(p̄₁p̄₂, n̄₁n̄₂)`.
    pub p_max: f64,
    /// Outer radius `√(p̄₁n̄₁p̄₂n̄₂)`.
    pub r_max: f64,
    /// `min(p̄₁n̄₂, n̄₁p̄₂)`.
    pub n_alt: f64,
    /// `min(p̄₁p̄₂, n̄₁n̄₂)`.
    pub p_alt: f64,
    pub n_min: f64,
    pub p_min: f64,
    /// Inner radius `√(p̲₁n̲₁p̲₂n̲₂)`.
    pub r_min: f64,
    /// Pair eigenvalues are `gain·c² − offset ± √((gain·c² − offset)² − r̄²)`.
    pub gain: f64,
    pub offset: f64,
    /// Pairs with `c` in `[complex_from, complex_to]` are complex conjugate.
    pub complex_from: f64,
    pub complex_to: f64,
}

impl LocusParams {
    pub fn new(outer: Levels, inner: Levels) -> Self {
        let Levels { p1, n1, p2, n2 } = outer;
        let gain = 0.5 * (p1 + n1) * (p2 + n2);
        let offset = 0.5 * (p1 * n2 + n1 * p2);
        let (a, b) = (libm::sqrt(p1 * n2), libm::sqrt(n1 * p2));
        let (complex_from, complex_to) = if gain > 0.0 {
            let d = libm::sqrt(2.0 * gain);
            ((a - b).abs() / d, (a + b) / d)
        } else {
            (0.0, 0.0)
        };
        Self {
            n_max: (p1 * n2).max(n1 * p2),
            p_max: (p1 * p2).max(n1 * n2),
            r_max: libm::sqrt(p1 * n1 * p2 * n2),
            n_alt: (p1 * n2).min(n1 * p2),
            p_alt: (p1 * p2).min(n1 * n2),
            n_min: (inner.p1 * inner.n2).min(inner.n1 * inner.p2),
            p_min: (inner.p1 * inner.p2).min(inner.n1 * inner.n2),
            r_min: libm::sqrt(inner.p1 * inner.n1 * inner.p2 * inner.n2),
            gain,
            offset,
            complex_from,
            complex_to,
        }
    }

    pub fn from_box(b: &AlphaBox) -> Self {
        let (f, s) = (&b.first, &b.second);
        Self::new(
            Levels { p1: f.p_max, n1: f.n_max, p2: s.p_max, n2: s.n_max },
            Levels { p1: f.p_min, n1: f.n_min, p2: s.p_min, n2: s.n_min },
        )
    }

    /// Closed-form pair for a cosine `c ∈ [0, 1]`.
    pub fn pair(&self, c: f64) -> [Complex<f64>; 2] {
        let centre = self.gain * c * c - self.offset;
        let disc = centre * centre - self.r_max * self.r_max;
        if disc >= 0.0 {
            let root = libm::sqrt(disc);
            [Complex::new(centre + root, 0.0), Complex::new(centre - root, 0.0)]
        } else {
            let root = libm::sqrt(-disc);
            [Complex::new(centre, root), Complex::new(centre, -root)]
        }
    }

    pub fn locus(&self) -> Locus {
        Locus {
            real_intervals: alloc::vec![(-self.n_max, -self.n_min), (self.p_min, self.p_max)],
            center: 0.0,
            inner_radius: self.r_min,
            outer_radius: self.r_max,
        }
    }

    pub fn contains(&self, lambda: Complex<f64>, tol: f64) -> bool {
        self.locus().contains(lambda, tol)
    }

    /// `max(|(1−q) − q n̄|, |(1−q) + q p̄|)`.
    pub fn rho_max(&self, q: f64) -> f64 {
        ((1.0 - q) - q * self.n_max).abs().max(((1.0 - q) + q * self.p_max).abs())
    }

    /// Relaxation minimising [`LocusParams::rho_max`].
    pub fn optimal_q(&self) -> OptimalRelaxation {
        if self.p_max >= 1.0 {
            return OptimalRelaxation { q: 0.0, rho_max: 1.0, convergent: false };
        }
        let denom = 2.0 + self.n_max - self.p_max;
        OptimalRelaxation { q: 2.0 / denom, rho_max: (self.p_max + self.n_max) / denom, convergent: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRelaxation {
    pub q: f64,
    pub rho_max: f64,
    /// `false` when `p̄ ≥ 1`: no `q` gives a guaranteed contraction.
    pub convergent: bool,
}

/// Real intervals plus an annulus around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Locus {
    pub real_intervals: Vec<(f64, f64)>,
    pub center: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Locus {
    /// Real values (`|Im λ| ≤ tol(1 + |λ|)`) are tested against the intervals,
    /// the rest against the annulus.
    pub fn contains(&self, lambda: Complex<f64>, tol: f64) -> bool {
        if lambda.im.abs() <= tol * (1.0 + modulus(lambda)) {
            self.real_intervals.iter().any(|&(lo, hi)| lambda.re >= lo - tol && lambda.re <= hi + tol)
        } else {
            let r = modulus(lambda - Complex::new(self.center, 0.0));
            r >= self.inner_radius - tol && r <= self.outer_radius + tol
        }
    }

    /// Image under `λ ↦ (1 − q) + qλ`.
    pub fn map_to_iteration(&self, q: f64) -> Locus {
        let f = |x: f64| (1.0 - q) + q * x;
        Locus {
            real_intervals: self
                .real_intervals
                .iter()
                .map(|&(lo, hi)| {
                    let (a, b) = (f(lo), f(hi));
                    (a.min(b), a.max(b))
                })
                .collect(),
            center: f(self.center),
            inner_radius: q.abs() * self.inner_radius,
            outer_radius: q.abs() * self.outer_radius,
        }
    }
}

/// `λ ↦ (1 − q) + qλ`, taking eigenvalues of `N(α)` to those of `R(α)`.
pub fn map_to_iteration(eigs: &[Complex<f64>], q: f64) -> Vec<Complex<f64>> {
    eigs.iter().map(|&z| Complex::new(1.0 - q, 0.0) + z * q).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPair {
    /// Singular value of the canonical `p₂×p₁` block.
    pub cosine: f64,
    /// Eigenvalues of the original spec (sign already applied).
    pub values: [Complex<f64>; 2],
}

/// Eigenvalues of the two-level product in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub reduction: Reduction,
    /// Constants of the canonical spec.
    pub params: LocusParams,
    pub pairs: Vec<ClosedFormPair>,
    /// Real eigenvalues outside the pairs (sign applied).
    pub leftovers: Vec<f64>,
}

impl ClosedForm {
    pub fn new(spec: &LevelSpec) -> Result<Self> {
        let reduction = spec.canonical();
        let c = reduction.spec.counts;
        if !c.is_canonical() {
            return Err(Error::DegenerateCounts(format!("reduction left counts {c:?}")));
        }
        let l = reduction.spec.levels;
        let params = LocusParams::new(l, Levels { p1: 0.0, n1: 0.0, p2: 0.0, n2: 0.0 });
        let sign = reduction.sign;

        let block = reduction.spec.g.view((0, 0), (c.p2, c.p1)).into_owned();
        let cosines: Vec<f64> =
            if c.p2 == 0 { Vec::new() } else { block.singular_values().iter().map(|&s| s.clamp(0.0, 1.0)).collect() };
        let pairs = cosines
            .into_iter()
            .map(|cosine| {
                let [a, b] = params.pair(cosine);
                ClosedFormPair { cosine, values: [a * sign, b * sign] }
            })
            .collect();

        let mut leftovers = Vec::with_capacity(c.n2 - c.p2);
        leftovers.extend((0..c.p1 - c.p2).map(|_| -sign * l.p1 * l.n2));
        leftovers.extend((0..c.n2 - c.p1).map(|_| sign * l.n1 * l.n2));
        Ok(Self { reduction, params, pairs, leftovers })
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        let mut out: Vec<Complex<f64>> = self.pairs.iter().flat_map(|p| p.values).collect();
        out.extend(self.leftovers.iter().map(|&x| Complex::new(x, 0.0)));
        out
    }
}

/// Closed-form eigenvalue multiset of `N` for a two-level spec.
pub fn closed_form_eigenvalues(spec: &LevelSpec) -> Result<Vec<Complex<f64>>> {
    Ok(ClosedForm::new(spec)?.eigenvalues())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::SlopeRange;
    use crate::linalg::{eigenvalues, multiset_deviation, random_orthogonal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_levels() -> Levels {
        Levels { p1: 1.0, n1: 1.0, p2: 1.0, n2: 1.0 }
    }

    fn zero_levels() -> Levels {
        Levels { p1: 0.0, n1: 0.0, p2: 0.0, n2: 0.0 }
    }

    #[test]
    fn reflections_land_on_unit_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_orthogonal(6, &mut rng);
        let spec = LevelSpec::new(unit_levels(), Counts { p1: 3, n1: 3, p2: 2, n2: 4 }, g).unwrap();
        for z in closed_form_eigenvalues(&spec).unwrap() {
            assert!((modulus(z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_positive_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_orthogonal(5, &mut rng);
        let levels = Levels { p1: 0.7, n1: 0.3, p2: 1.5, n2: 0.2 };
        let spec = LevelSpec::new(levels, Counts { p1: 5, n1: 0, p2: 5, n2: 0 }, g).unwrap();
        for z in closed_form_eigenvalues(&spec).unwrap() {
            assert!((z - Complex::new(0.7 * 1.5, 0.0)).norm_sqr() < 1e-24);
        }
    }

    #[test]
    fn matches_dense_solver_in_every_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 7;
        for p1 in 0..=m {
            for p2 in 0..=m {
                let g = random_orthogonal(m, &mut rng);
                let levels = Levels {
                    p1: rng.random_range(0.1..2.0),
                    n1: rng.random_range(0.1..2.0),
                    p2: rng.random_range(0.1..2.0),
                    n2: rng.random_range(0.1..2.0),
                };
                let counts = Counts { p1, n1: m - p1, p2, n2: m - p2 };
                let spec = LevelSpec::new(levels, counts, g).unwrap();
                let direct = eigenvalues(&spec.product_matrix());
                let closed = closed_form_eigenvalues(&spec).unwrap();
                let dev = multiset_deviation(&closed, &direct);
                assert!(dev < 1e-8, "counts {counts:?}: deviation {dev}");
            }
        }
    }

    #[test]
    fn rotation_cosine() {
        let theta: f64 = 2.3;
        let g = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let spec = LevelSpec::new(unit_levels(), Counts { p1: 1, n1: 1, p2: 1, n2: 1 }, g).unwrap();
        let cf = ClosedForm::new(&spec).unwrap();
        assert!((cf.pairs[0].cosine - theta.cos().abs()).abs() < 1e-14);
    }

    #[test]
    fn not_orthogonal_rejected() {
        let g = DMatrix::from_element(2, 2, 1.0);
        let err = LevelSpec::new(unit_levels(), Counts { p1: 1, n1: 1, p2: 1, n2: 1 }, g).unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal { .. }));
        let err = LevelSpec::new(unit_levels(), Counts { p1: 1, n1: 0, p2: 1, n2: 1 }, DMatrix::identity(2, 2));
        assert!(matches!(err, Err(Error::DegenerateCounts(_))));
    }

    #[test]
    fn constants_for_reflections() {
        let lp = LocusParams::new(unit_levels(), zero_levels());
        assert_eq!((lp.n_max, lp.p_max, lp.r_max), (1.0, 1.0, 1.0));
        assert_eq!((lp.n_min, lp.p_min, lp.r_min), (0.0, 0.0, 0.0));
        assert_eq!((lp.complex_from, lp.complex_to), (0.0, 1.0));
    }

    #[test]
    fn constants_for_lasso_box() {
        let lp = LocusParams::new(Levels { p1: 0.4853, n1: 0.9676, p2: 1.0, n2: 1.0 }, zero_levels());
        assert!((lp.r_max - 0.6853).abs() < 5e-5);
        assert_eq!(lp.p_max, 0.9676);
        assert_eq!(lp.n_max, 0.9676);
    }

    #[test]
    fn degenerate_level_collapses_circle() {
        let lp = LocusParams::new(Levels { p1: 0.5, n1: 0.8, p2: 1.0, n2: 0.0 }, zero_levels());
        assert_eq!(lp.r_max, 0.0);
        assert_eq!(lp.n_max, 0.8);
    }

    #[test]
    fn contains_boundaries_and_gap() {
        let b = AlphaBox {
            first: SlopeRange::new(1.0, 0.9, 0.9, 1.0).unwrap(),
            second: SlopeRange::new(1.0, 0.9, 0.9, 1.0).unwrap(),
        };
        let lp = LocusParams::from_box(&b);
        assert!(lp.contains(Complex::new(lp.p_max, 0.0), 0.0));
        assert!(lp.contains(Complex::new(0.0, lp.r_max), 1e-12));
        assert!(lp.p_min > 0.5);
        assert!(!lp.contains(Complex::new(0.5, 0.0), 1e-9));
        assert!(!lp.contains(Complex::new(0.0, 0.5), 1e-9));
    }

    #[test]
    fn affine_map_examples() {
        let eigs = [Complex::new(0.3, 0.4), Complex::new(1.0, 0.0), Complex::new(-2.0, 0.0)];
        assert_eq!(map_to_iteration(&eigs, 1.0), eigs.to_vec());
        for z in map_to_iteration(&eigs, 0.0) {
            assert_eq!(z, Complex::new(1.0, 0.0));
        }
        for q in [-1.5, 0.3, 2.0] {
            assert!((map_to_iteration(&eigs, q)[1] - Complex::new(1.0, 0.0)).norm_sqr() < 1e-30);
        }
        let lp = LocusParams::new(unit_levels(), zero_levels());
        let r = lp.locus().map_to_iteration(-0.5);
        assert_eq!(r.center, 1.5);
        assert_eq!(r.outer_radius, 0.5);
        assert_eq!(r.real_intervals[0], (1.5, 2.0));
    }

    #[test]
    fn optimal_q_examples() {
        let sym = |v: f64| LocusParams { n_max: v, p_max: v, ..LocusParams::new(unit_levels(), zero_levels()) };
        let o = sym(0.9676).optimal_q();
        assert_eq!(o.q, 1.0);
        assert!((o.rho_max - 0.9676).abs() < 1e-15);
        let o = sym(0.5).optimal_q();
        assert_eq!((o.q, o.rho_max), (1.0, 0.5));
        let lp = sym(0.5);
        let grid = (-2000..=2000).map(|k| lp.rho_max(k as f64 * 1e-3)).fold(f64::INFINITY, f64::min);
        assert!((grid - 0.5).abs() < 1e-12);
        let o = LocusParams { p_max: 1.2, ..sym(0.5) }.optimal_q();
        assert_eq!((o.q, o.rho_max, o.convergent), (0.0, 1.0, false));
    }
}
