#![allow(dead_code)]

use admm_spectra::linalg::random_orthogonal;
use admm_spectra::{PiecewiseLinear1D, SeparableFunction, SplitProblem};
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random PSD matrix of the given rank.
pub fn psd<R: Rng>(n: usize, rank: usize, rng: &mut R) -> DMatrix<f64> {
    let b = gaussian(n, rank, rng);
    &b * b.transpose()
}

pub fn random_piecewise<R: Rng>(rng: &mut R) -> PiecewiseLinear1D {
    let k = rng.random_range(1..=3);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut slope = rng.random_range(-2.0..0.0);
    let mut ms = vec![slope];
    for _ in 0..xs.len() {
        slope += rng.random_range(0.1..1.5);
        ms.push(slope);
    }
    PiecewiseLinear1D::new(xs, ms).unwrap()
}

/// Random separable non-smooth term of dimension `n`.
pub fn random_nonsmooth<R: Rng>(n: usize, rng: &mut R) -> SeparableFunction {
    if rng.random_bool(0.5) {
        SeparableFunction::WeightedL1 { weights: DVector::from_fn(n, |_, _| rng.random_range(0.0..1.5)) }
    } else {
        SeparableFunction::PiecewiseLinear { pieces: (0..n).map(|_| random_piecewise(rng)).collect() }
    }
}

pub fn random_quadratic<R: Rng>(n: usize, rng: &mut R) -> SeparableFunction {
    let rank = rng.random_range(0..=n);
    SeparableFunction::Quadratic { q: psd(n, rank, rng), c: gaussian_vec(n, rng) }
}

/// Random diagonal matrix with entries bounded away from zero, signs mixed.
pub fn random_diagonal<R: Rng>(n: usize, signed: bool, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else {
            let v = rng.random_range(0.5..2.0);
            if signed && rng.random_bool(0.5) {
                -v
            } else {
                v
            }
        }
    })
}

/// Convex problem: quadratic first term with a dense tall constraint matrix,
/// second term either quadratic (dense constraint, dense `E`) or separable
/// non-smooth (diagonal constraint and `E`).
pub fn random_convex_problem<R: Rng>(m: usize, rng: &mut R) -> SplitProblem {
    let n1 = rng.random_range(1..=m);
    let nonsmooth = rng.random_bool(0.6);
    let (f2, a2, e) = if nonsmooth {
        (random_nonsmooth(m, rng), random_diagonal(m, true, rng), random_diagonal(m, false, rng))
    } else {
        let n2 = rng.random_range(1..=m);
        let e = psd(m, m, rng) + DMatrix::identity(m, m) * 0.5;
        (random_quadratic(n2, rng), gaussian(m, n2, rng), e)
    };
    SplitProblem { f1: random_quadratic(n1, rng), f2, a1: gaussian(m, n1, rng), a2, b: gaussian_vec(m, rng), e }
}

/// `V₁ᵀ diag(α₁) V₁ V₂ᵀ diag(α₂) V₂`.
pub fn slope_product(v1: &DMatrix<f64>, a1: &DVector<f64>, v2: &DMatrix<f64>, a2: &DVector<f64>) -> DMatrix<f64> {
    v1.transpose() * DMatrix::from_diagonal(a1) * v1 * v2.transpose() * DMatrix::from_diagonal(a2) * v2
}

pub fn random_bases<R: Rng>(m: usize, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>) {
    (random_orthogonal(m, rng), random_orthogonal(m, rng))
}

/// Largest distance in an optimal-ish pairing of two eigenvalue multisets: both
/// are sorted by (real part, imaginary part) and each element of `a` is matched
/// to the nearest still-unused element of `b`.
pub fn paired_deviation(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let key = |z: &Complex<f64>| (z.re, z.im);
    let mut a = a.to_vec();
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    let mut free: Vec<Complex<f64>> = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (idx, d) = free
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm_sqr().sqrt()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        free.swap_remove(idx);
        worst = worst.max(d);
    }
    worst
}

/// Dense general eigenvalues straight from nalgebra's Schur form, without the
/// library's fallback chain. A stalled QR iteration is retried with a looser
/// deflation threshold and then on random orthogonal similarities.
pub fn dense_eigs(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut a = m.clone();
    for attempt in 0..20 {
        let eps = [f64::EPSILON, 1e-15, 1e-14, 1e-13][attempt.min(3)];
        if let Some(schur) = nalgebra::Schur::try_new(a.clone(), eps, 10_000) {
            return quasi_triangular_eigs(&schur.unpack().1);
        }
        STALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if attempt >= 3 {
            let q = random_orthogonal(m.nrows(), &mut rng);
            a = q.transpose() * m * &q;
        }
    }
    panic!("Schur iteration did not converge")
}

/// Number of stalled Schur attempts seen by [`dense_eigs`].
pub static STALLS: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

/// Eigenvalues of the diagonal blocks of a real Schur form, via the trace and
/// determinant of each 2×2 block.
fn quasi_triangular_eigs(t: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let block = t.view((i, i), (2, 2));
            let tr = block.trace();
            let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
            let d = tr * tr / 4.0 - det;
            let s = d.abs().sqrt();
            if d >= 0.0 {
                out.extend([Complex::new(tr / 2.0 + s, 0.0), Complex::new(tr / 2.0 - s, 0.0)]);
            } else {
                out.extend([Complex::new(tr / 2.0, s), Complex::new(tr / 2.0, -s)]);
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}
