//! Small symmetric-matrix utilities shared by training, canonicalization and
//! LDA. Everything here is deterministic: eigenvalues come out sorted
//! descending with a stable index tie-break, and eigenvector signs are fixed
//! so repeated runs produce identical bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetrizes in place; accumulated rounding can leave scatter matrices a few
/// ulps off symmetric, which the eigensolver then amplifies.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending (ties broken by original index) and each eigenvector's
/// largest-magnitude component made positive.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let p = m.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut values = DVector::zeros(p);
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let mut pivot = 0;
        for i in 1..p {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Whitening transform `T` for a symmetric PSD matrix `w`: `T w T' = I` after
/// eigenvalue flooring. Errors when even the largest eigenvalue sits at or
/// below the floor, i.e. there is no structure left to whiten.
pub struct Whitener {
    pub transform: DMatrix<f64>,
    /// Inverse square root pieces, kept for cheap reconstruction of `w^{-1}`
    /// and `log|det|` terms.
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

pub fn whiten(w: &DMatrix<f64>, floor: f64) -> Result<Whitener> {
    let (mut values, vectors) = sym_eigen_desc(w);
    let max_eigen = values[0];
    if !(max_eigen > floor) {
        return Err(Error::SingularWithin { max_eigen, floor });
    }
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
    // T = D^{-1/2} U'
    let mut transform = vectors.transpose();
    for (i, row) in values.iter().enumerate() {
        let s = 1.0 / row.sqrt();
        transform.row_mut(i).scale_mut(s);
    }
    Ok(Whitener { transform, eigenvalues: values, eigenvectors: vectors })
}

/// Clamps the eigenvalues of a symmetric matrix to at least `floor` and
/// reconstructs. Used to keep the between-class covariance invertible inside
/// EM without disturbing healthy runs (the floor only binds on degenerate
/// directions).
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let (mut values, vectors) = sym_eigen_desc(m);
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
    let p = values.len();
    let mut scaled = vectors.clone();
    for j in 0..p {
        scaled.column_mut(j).scale_mut(values[j]);
    }
    let mut out = scaled * vectors.transpose();
    symmetrize(&mut out);
    out
}

/// Canonical form of a (within, between) covariance pair: an invertible `M`
/// with `M M' = within` (after flooring) and `M diag(epsilon) M' = between`.
pub struct Canonical {
    pub transform: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub log_abs_det: f64,
    pub epsilon: DVector<f64>,
}

pub fn canonicalize(
    within: &DMatrix<f64>,
    between: &DMatrix<f64>,
    within_floor: f64,
    epsilon_floor: f64,
) -> Result<Canonical> {
    let wh = whiten(within, within_floor)?;
    let mut b = &wh.transform * between * wh.transform.transpose();
    symmetrize(&mut b);
    let (mut epsilon, v) = sym_eigen_desc(&b);
    for e in epsilon.iter_mut() {
        if *e < epsilon_floor {
            *e = epsilon_floor;
        }
    }
    // M^{-1} = V' T and M = U D^{1/2} V; both orthogonal factors drop out of
    // |det M|, leaving the whitened eigenvalues.
    let inverse = v.transpose() * &wh.transform;
    let p = epsilon.len();
    let mut m = wh.eigenvectors.clone();
    for j in 0..p {
        m.column_mut(j).scale_mut(wh.eigenvalues[j].sqrt());
    }
    let transform = m * &v;
    let log_abs_det = 0.5 * wh.eigenvalues.iter().map(|d| d.ln()).sum::<f64>();
    Ok(Canonical { transform, inverse, log_abs_det, epsilon })
}

/// `ln |det M|` and the smallest singular value, via SVD.
pub fn det_and_condition(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let log_abs_det = sv.iter().map(|s| s.ln()).sum::<f64>();
    let min_sv = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (log_abs_det, min_sv)
}
