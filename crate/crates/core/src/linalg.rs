//! Dense linear-algebra helpers shared by the solver and the analysis.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Tolerance used for PSD tests: `1e-10 * (1 + max|entry|)`.
pub fn psd_tolerance(m: &DMatrix<f64>) -> f64 {
    1e-10 * (1.0 + m.amax())
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Eigendecomposition of the symmetric part, eigenvalues sorted ascending.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    // separable directions rely on getting the coordinate axes back exactly
    let eig = if is_diagonal(m) {
        SymmetricEigen { eigenvalues: m.diagonal(), eigenvectors: DMatrix::identity(n, n) }
    } else {
        SymmetricEigen::new(symmetrize(m))
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Symmetric square root and inverse square root of a positive definite matrix.
pub fn sqrt_and_inv_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    if is_diagonal(m) {
        let d = m.diagonal();
        return (DMatrix::from_diagonal(&d.map(libm::sqrt)), DMatrix::from_diagonal(&d.map(|x| 1.0 / libm::sqrt(x))));
    }
    let (vals, vecs) = sorted_symmetric_eigen(m);
    let root = &vecs * DMatrix::from_diagonal(&vals.map(|x| libm::sqrt(x.max(0.0)))) * vecs.transpose();
    let inv = &vecs * DMatrix::from_diagonal(&vals.map(|x| 1.0 / libm::sqrt(x))) * vecs.transpose();
    (root, inv)
}

/// Range of a PSD matrix: orthonormal basis of the eigenvectors whose eigenvalue
/// exceeds `rtol * max eigenvalue`, together with those eigenvalues.
#[derive(Debug, Clone)]
pub struct PsdRange {
    pub basis: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl PsdRange {
    pub fn new(m: &DMatrix<f64>, rtol: f64) -> Self {
        let n = m.nrows();
        let (vals, vecs) = sorted_symmetric_eigen(m);
        let top = vals.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..n).filter(|&k| top > 0.0 && vals[k] > rtol * top).collect();
        let mut basis = DMatrix::zeros(n, keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            basis.set_column(dst, &vecs.column(src));
        }
        let values = DVector::from_iterator(keep.len(), keep.iter().map(|&k| vals[k]));
        Self { basis, values }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Moore–Penrose inverse square root `W diag(1/sqrt(v)) Wᵀ`.
    pub fn pinv_sqrt(&self) -> DMatrix<f64> {
        &self.basis * DMatrix::from_diagonal(&self.values.map(|x| 1.0 / libm::sqrt(x))) * self.basis.transpose()
    }
}

/// Orthonormal basis of the orthogonal complement of the column span of `frame`
/// (whose columns must be orthonormal).
pub fn orthogonal_complement(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let m = frame.nrows();
    let r = frame.ncols();
    let proj = DMatrix::identity(m, m) - frame * frame.transpose();
    let (vals, vecs) = sorted_symmetric_eigen(&proj);
    // eigenvalues are 0 (r of them) or 1 (m - r of them)
    let mut out = DMatrix::zeros(m, m - r);
    for k in 0..(m - r) {
        let src = m - 1 - k;
        debug_assert!(vals[src] > 0.5);
        out.set_column(k, &vecs.column(src));
    }
    out
}

/// Extends orthonormal columns to a full orthonormal basis of `R^n` by Gram–Schmidt
/// against the canonical basis. `cols` may contain zero columns, which get replaced.
pub fn complete_orthonormal(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cols.nrows();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut pending: Vec<usize> = Vec::new();
    for j in 0..cols.ncols() {
        let c = cols.column(j).into_owned();
        if c.norm() > 0.5 {
            out.push(c);
        } else {
            out.push(DVector::zeros(n));
            pending.push(j);
        }
    }
    let fill = |out: &mut Vec<DVector<f64>>| -> DVector<f64> {
        for e in 0..n {
            let mut v = DVector::zeros(n);
            v[e] = 1.0;
            for _ in 0..2 {
                for u in out.iter() {
                    let d = u.dot(&v);
                    v -= u * d;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                return v / norm;
            }
        }
        unreachable!("basis already complete")
    };
    for j in pending {
        let v = fill(&mut out);
        out[j] = v;
    }
    while out.len() < n {
        let v = fill(&mut out);
        out.push(v);
    }
    DMatrix::from_columns(&out)
}

/// Eigenvalues of a general real square matrix (Schur based).
///
/// The QR iteration is capped. A stalled run is retried with a looser
/// deflation threshold, then on pseudo-random orthogonal similarities.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let cap = 100 * n.max(10);
    let thresholds = [f64::EPSILON, 1e-15, 1e-14, 1e-13, 1e-12];
    for eps in thresholds {
        if let Some(s) = Schur::try_new(m.clone(), eps, cap) {
            return block_eigenvalues(&s.unpack().1);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4u64);
    for eps in thresholds.iter().chain([1e-10, 1e-8].iter()) {
        let q = random_orthogonal(n, &mut rng);
        let rotated = q.transpose() * m * &q;
        if let Some(s) = Schur::try_new(rotated, *eps, cap) {
            return block_eigenvalues(&s.unpack().1);
        }
    }
    let rotated = {
        let q = random_orthogonal(n, &mut rng);
        q.transpose() * m * &q
    };
    block_eigenvalues(&Schur::try_new(rotated, 1e-6, 0).expect("unbounded QR iteration").unpack().1)
}

/// Eigenvalues of a real quasi-triangular matrix from its 1×1 and 2×2
/// diagonal blocks. A 2×2 block whose discriminant rounds to a tiny negative
/// value still yields a finite pair.
pub fn block_eigenvalues(t: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mean = 0.5 * (a + d);
            let half = 0.5 * (a - d);
            let disc = half * half + b * c;
            if disc >= 0.0 {
                let root = libm::sqrt(disc);
                out.push(Complex::new(mean + root, 0.0));
                out.push(Complex::new(mean - root, 0.0));
            } else {
                let root = libm::sqrt(-disc);
                out.push(Complex::new(mean, root));
                out.push(Complex::new(mean, -root));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

/// `|z|`.
pub fn modulus(z: Complex<f64>) -> f64 {
    libm::hypot(z.re, z.im)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| modulus(*z)).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Largest distance between paired elements of two complex multisets, pairing each
/// element of `a` greedily with its nearest unused element of `b`, largest
/// magnitudes first. Returns `f64::INFINITY` on a size mismatch.
pub fn multiset_deviation(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| {
        modulus(a[j]).total_cmp(&modulus(a[i])).then(a[j].re.total_cmp(&a[i].re)).then(a[j].im.total_cmp(&a[i].im))
    });
    let mut used = alloc::vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for i in order {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (k, z) in b.iter().enumerate() {
            if !used[k] {
                let d = modulus(a[i] - z);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
        }
        used[best] = true;
        worst = worst.max(best_d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(7, &mut rng);
        let err = (q.transpose() * &q - DMatrix::identity(7, 7)).amax();
        assert!(err < 1e-12);
    }

    #[test]
    fn complement_spans_the_rest() {
        let frame = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let k = orthogonal_complement(&frame);
        assert_eq!(k.ncols(), 2);
        assert!((frame.transpose() * &k).amax() < 1e-12);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn completion_replaces_zero_columns() {
        let mut cols = DMatrix::zeros(3, 2);
        cols[(1, 0)] = 1.0;
        let full = complete_orthonormal(&cols);
        assert_eq!(full.ncols(), 3);
        assert_eq!(full[(1, 0)], 1.0);
        assert!((full.transpose() * &full - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn pinv_sqrt_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let r = PsdRange::new(&m, 1e-12);
        assert_eq!(r.rank(), 1);
        let p = r.pinv_sqrt();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn block_eigenvalues_stay_finite_for_tied_pairs() {
        let t = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 5.0, -0.5, 1.0, 1.0, 0.0, 0.0, -3.0]);
        let e = block_eigenvalues(&t);
        assert_eq!(e, [Complex::new(1.0, 1.0), Complex::new(1.0, -1.0), Complex::new(-3.0, 0.0)]);
        // discriminant rounds to a tiny negative value
        let tied = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -1e-300, 0.5]);
        assert!(block_eigenvalues(&tied).iter().all(|z| z.re == 0.5 && z.im.is_finite()));
    }

    #[test]
    fn multiset_deviation_pairs_conjugates() {
        let a = [Complex::new(0.0, 1.0), Complex::new(0.0, -1.0), Complex::new(2.0, 0.0)];
        let b = [Complex::new(2.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0 + 1e-9)];
        assert!(multiset_deviation(&a, &b) < 2e-9);
    }
}
