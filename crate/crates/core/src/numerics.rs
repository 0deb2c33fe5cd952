//! Dense numeric kernels shared by the symbolic modules.

use nalgebra::DMatrix;

/// Number of singular values above `tol * max(1, σ_max)`.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let thr = tol * smax.max(1.0);
    sv.iter().filter(|s| **s > thr).count()
}

/// Least-squares solution of `a x = b` via SVD with the same threshold rule.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, tol * smax.max(1.0)).ok()
}

/// Orthonormal basis (columns) of the column space.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = tol * smax.max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > thr)
        .collect();
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| u[(i, cols[j])])
}

/// Orthonormal basis (columns) of the null space.
pub fn null_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to square so the full right singular basis is available
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = tol * smax.max(1.0);
    let rows: Vec<usize> = (0..vt.nrows())
        .filter(|&i| svd.singular_values.get(i).is_none_or(|s| *s <= thr))
        .collect();
    DMatrix::from_fn(n, rows.len(), |i, j| vt[(rows[j], i)])
}

/// Orthonormal basis of the intersection of two column spaces.
pub fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut ab = DMatrix::zeros(n, a.ncols() + b.ncols());
    ab.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    ab.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(&(-b));
    let ns = null_basis(&ab, tol);
    let v = a * ns.rows(0, a.ncols());
    range_basis(&v, tol)
}

/// Columns of `cand` completing `base` to a basis of span(base ∪ cand),
/// chosen greedily in order.
pub fn complete_basis(base: &DMatrix<f64>, cand: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = base.nrows().max(cand.nrows());
    let mut cur = base.clone();
    let mut picked: Vec<usize> = Vec::new();
    for j in 0..cand.ncols() {
        let mut trial = DMatrix::zeros(n, cur.ncols() + 1);
        if cur.ncols() > 0 {
            trial.view_mut((0, 0), (n, cur.ncols())).copy_from(&cur);
        }
        trial.column_mut(cur.ncols()).copy_from(&cand.column(j));
        if rank(&trial, tol) > rank(&cur, tol) {
            cur = trial;
            picked.push(j);
        }
    }
    DMatrix::from_fn(n, picked.len(), |i, j| cand[(i, picked[j])])
}
