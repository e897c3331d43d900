//! CS decomposition of a partitioned orthogonal matrix in canonical ordering,
//! and the block structure it induces on `G H₁ Gᵀ H₂`.
//!
//! With rows split `(p₂ | n₂)` and columns `(p₁ | n₁)`, `p₂ ≤ p₁ ≤ n₁ ≤ n₂`,
//! `G = diag(A₁, A₂) · M · diag(B₁, B₂)` where, in row blocks `(p₂, p₂, q₁, q₂)` and
//! column blocks `(p₂, q₁, p₂, q₂)` with `q₁ = p₁ − p₂`, `q₂ = n₂ − p₁`,
//!
//! ```text
//! M = | C  0  −S  0 |
//!     | S  0   C  0 |
//!     | 0  I   0  0 |
//!     | 0  0   0  I |
//! ```

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal, eigenvalues, multiset_deviation};
use crate::locus::{check_orthogonal, Counts, Levels, LocusParams};

/// Sines below this are treated as zero when rebuilding the second row block.
const SINE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CsFactors {
    pub counts: Counts,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub cosines: DVector<f64>,
    pub sines: DVector<f64>,
    pub core: DMatrix<f64>,
}

impl CsFactors {
    pub fn left(&self) -> DMatrix<f64> {
        block_diag(&self.a1, &self.a2)
    }

    pub fn right(&self) -> DMatrix<f64> {
        block_diag(&self.b1, &self.b2)
    }

    pub fn reassemble(&self) -> DMatrix<f64> {
        self.left() * &self.core * self.right()
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// The structured core for given cosines.
pub fn core_matrix(counts: Counts, cosines: &DVector<f64>, sines: &DVector<f64>) -> DMatrix<f64> {
    let Counts { p1, p2, n2, .. } = counts;
    let m = counts.dim();
    let q1 = p1 - p2;
    let mut core = DMatrix::zeros(m, m);
    for i in 0..p2 {
        core[(i, i)] = cosines[i];
        core[(i, p1 + i)] = -sines[i];
        core[(p2 + i, i)] = sines[i];
        core[(p2 + i, p1 + i)] = cosines[i];
    }
    for k in 0..q1 {
        core[(2 * p2 + k, p2 + k)] = 1.0;
    }
    for k in 0..(n2 - p1) {
        core[(p2 + p1 + k, p1 + p2 + k)] = 1.0;
    }
    core
}

pub fn cs_decompose(g: &DMatrix<f64>, counts: Counts) -> Result<CsFactors> {
    if !counts.is_canonical() || counts.dim() != g.nrows() || counts.p2 + counts.n2 != g.nrows() || !g.is_square() {
        return Err(Error::DegenerateCounts(format!("CS decomposition needs canonical counts, got {counts:?}")));
    }
    check_orthogonal(g)?;
    let Counts { p1, n1, p2, n2 } = counts;

    // G₁ = A₁ [C 0] B₁ from a full SVD of the p₂×p₁ block
    let (a1, cosines, b1) = if p2 == 0 {
        (DMatrix::zeros(0, 0), DVector::zeros(0), DMatrix::identity(p1, p1))
    } else {
        let svd = g.view((0, 0), (p2, p1)).into_owned().svd(true, true);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..p2).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let a1 = DMatrix::from_fn(p2, p2, |r, c| u[(r, order[c])]);
        let cosines = DVector::from_iterator(p2, order.iter().map(|&k| svd.singular_values[k].min(1.0)));
        let v_thin = DMatrix::from_fn(p1, p2, |r, c| vt[(order[c], r)]);
        let b1 = complete_orthonormal(&v_thin).transpose();
        (a1, cosines, b1)
    };
    let sines = cosines.map(|c| libm::sqrt((1.0 - c * c).max(0.0)));

    // G₃ B₁ᵀ = A₂ [S 0; 0 I; 0 0]
    let w = g.view((p2, 0), (n2, p1)) * b1.transpose();
    let mut cols = DMatrix::zeros(n2, n2);
    for j in 0..p2 {
        if sines[j] > SINE_FLOOR {
            cols.set_column(j, &(w.column(j) / sines[j]));
        }
    }
    for j in p2..p1 {
        cols.set_column(j, &w.column(j));
    }
    let a2 = complete_orthonormal(&cols);

    let core = core_matrix(counts, &cosines, &sines);
    let left = block_diag(&a1, &a2);
    let right = core.transpose() * left.transpose() * g;
    let b2 = right.view((p1, p1), (n1, n1)).into_owned();
    Ok(CsFactors { counts, a1, a2, b1, b2, cosines, sines, core })
}

/// Outcome of [`verify_h_structure`].
#[derive(Debug, Clone, PartialEq)]
pub struct HStructureReport {
    /// Eigenvalues of each 2×2 block, in cosine order.
    pub pair_blocks: Vec<[Complex<f64>; 2]>,
    /// Largest deviation of `H` from the expected block pattern.
    pub pattern_error: f64,
    /// Largest deviation of the 2×2 block eigenvalues from the closed form.
    pub eigenvalue_error: f64,
}

/// Builds `H = M H₁ Mᵀ H₂` and checks it against the expected pattern: a 2×2 block
/// on indices `(i, p₂ + i)` per cosine and scalar blocks `−p₁n₂` (`q₁` of them)
/// and `n₁n₂` (`q₂` of them) in level terms.
pub fn verify_h_structure(cs: &CsFactors, levels: Levels) -> Result<HStructureReport> {
    const TOL: f64 = 1e-9;
    let Counts { p1, n1, p2, n2 } = cs.counts;
    let m = cs.counts.dim();
    let h1 = DVector::from_iterator(m, (0..p1).map(|_| levels.p1).chain((0..n1).map(|_| -levels.n1)));
    let h2 = DVector::from_iterator(m, (0..p2).map(|_| levels.p2).chain((0..n2).map(|_| -levels.n2)));
    let h = &cs.core * DMatrix::from_diagonal(&h1) * cs.core.transpose() * DMatrix::from_diagonal(&h2);

    let mut expected = DMatrix::zeros(m, m);
    let mut block_of = alloc::vec![0usize; m];
    for i in 0..p2 {
        let (c, s) = (cs.cosines[i], cs.sines[i]);
        let j = p2 + i;
        expected[(i, i)] = (c * c * levels.p1 - s * s * levels.n1) * levels.p2;
        expected[(i, j)] = -c * s * (levels.p1 + levels.n1) * levels.n2;
        expected[(j, i)] = c * s * (levels.p1 + levels.n1) * levels.p2;
        expected[(j, j)] = (c * c * levels.n1 - s * s * levels.p1) * levels.n2;
        block_of[i] = i;
        block_of[j] = i;
    }
    let q1 = p1 - p2;
    for k in 0..q1 {
        let idx = 2 * p2 + k;
        expected[(idx, idx)] = -levels.p1 * levels.n2;
        block_of[idx] = p2 + k;
    }
    for k in 0..(n2 - p1) {
        let idx = p2 + p1 + k;
        expected[(idx, idx)] = levels.n1 * levels.n2;
        block_of[idx] = p2 + q1 + k;
    }

    let scale = 1.0 + h.amax();
    let mut pattern_error: f64 = 0.0;
    for c in 0..m {
        for r in 0..m {
            let err = (h[(r, c)] - expected[(r, c)]).abs();
            pattern_error = pattern_error.max(err);
            if err > TOL * scale {
                return Err(Error::StructureMismatch { block: block_of[r] });
            }
        }
    }

    let params = LocusParams::new(levels, Levels { p1: 0.0, n1: 0.0, p2: 0.0, n2: 0.0 });
    let mut pair_blocks = Vec::with_capacity(p2);
    let mut eigenvalue_error: f64 = 0.0;
    for i in 0..p2 {
        let idx = [i, p2 + i];
        let block = DMatrix::from_fn(2, 2, |r, c| h[(idx[r], idx[c])]);
        let found = eigenvalues(&block);
        let closed = params.pair(cs.cosines[i]);
        let err = multiset_deviation(&found, &closed);
        eigenvalue_error = eigenvalue_error.max(err);
        if err > TOL * scale {
            return Err(Error::StructureMismatch { block: i });
        }
        pair_blocks.push([found[0], found[1]]);
    }
    Ok(HStructureReport { pair_blocks, pattern_error, eigenvalue_error })
}
