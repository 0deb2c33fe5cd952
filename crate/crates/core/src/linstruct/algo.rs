use nalgebra::DMatrix;

use crate::numerics;
use crate::structalgo::{classify_invertibility, Invertibility};

use super::{LinError, LinearTriple};

/// Constant-matrix run of the structure algorithm. Row functionals stand in
/// for `Θ_k`, `Ω_k`.
#[derive(Debug, Clone)]
pub struct LinearStructure {
    pub rho: Vec<usize>,
    pub q: Vec<usize>,
    pub invertibility: Invertibility,
    /// `Θ_0 .. Θ_{k*}` as row blocks.
    pub thetas: Vec<DMatrix<f64>>,
    pub r_rows: Vec<Vec<usize>>,
    pub s_rows: Vec<Vec<usize>>,
    pub p: Vec<DMatrix<f64>>,
    /// `Ω_{k*}`.
    pub omega: DMatrix<f64>,
}

fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols().max(b.ncols());
    DMatrix::from_fn(a.nrows() + b.nrows(), n, |i, j| {
        if i < a.nrows() {
            a[(i, j)]
        } else {
            b[(i - a.nrows(), j)]
        }
    })
}

fn select(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

impl LinearStructure {
    /// `(q_i, Θ-index path)` per chain, ordered by step then row.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (k0, rs) in self.r_rows.iter().enumerate() {
            let l = k0 + 1;
            for &t in rs {
                let mut idx = vec![0; l];
                idx[l - 1] = t;
                for j in (1..l).rev() {
                    idx[j - 1] = self.s_rows[j - 1][idx[j]];
                }
                out.push(idx);
            }
        }
        out
    }

    /// Row functional of `ξ_{i,j}` (0-based `i`, 1-based `j`).
    pub fn xi_row(&self, chain: &[usize], j: usize) -> DMatrix<f64> {
        self.thetas[j - 1].rows(chain[j - 1], 1).into_owned()
    }
}

/// Rows of `cand` joining `base`, each time the one with the largest
/// component orthogonal to the rows already chosen.
fn pivot_rows(base: &DMatrix<f64>, cand: &DMatrix<f64>, need: usize, tol: f64) -> Vec<usize> {
    let mut picked = Vec::new();
    let mut cur = base.clone();
    for _ in 0..need {
        let basis = numerics::range_basis(&cur.transpose(), tol);
        let best = (0..cand.nrows())
            .filter(|i| !picked.contains(i))
            .map(|i| {
                let r = cand.row(i).transpose();
                let resid = &r - &basis * (basis.transpose() * &r);
                (i, resid.norm())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, _)) = best else { break };
        picked.push(i);
        cur = vstack(&cur, &cand.rows(i, 1).into_owned());
    }
    picked.sort_unstable();
    picked
}

pub fn linear_structure(t: &LinearTriple, tol: f64) -> LinearStructure {
    let (n, m, p) = (t.n(), t.m(), t.p());
    let mut theta = t.c.clone();
    let mut thetas = vec![theta.clone()];
    let mut omega = DMatrix::zeros(0, n);
    let (mut rho, mut r_rows, mut s_rows, mut ps) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut prev = 0;
    let mut weighted = 0;
    for k in 1..=n.max(1) {
        let ob = &omega * &t.b;
        let tb = &theta * &t.b;
        let rank = numerics::rank(&vstack(&ob, &tb), tol);
        let r = pivot_rows(&ob, &tb, rank - prev, tol);
        let s: Vec<usize> = (0..theta.nrows()).filter(|i| !r.contains(i)).collect();
        omega = vstack(&omega, &select(&theta, &r));
        let ob = &omega * &t.b;
        let sb = select(&tb, &s);
        let pk = if omega.nrows() == 0 || s.is_empty() {
            DMatrix::zeros(s.len(), omega.nrows())
        } else {
            let gram = &ob * ob.transpose();
            let inv = gram
                .try_inverse()
                .unwrap_or_else(|| DMatrix::zeros(omega.nrows(), omega.nrows()));
            sb * ob.transpose() * inv
        };
        theta = select(&theta, &s) * &t.a - &pk * &omega * &t.a;
        weighted += k * (rank - prev);
        rho.push(rank);
        r_rows.push(r);
        s_rows.push(s);
        ps.push(pk);
        thetas.push(theta.clone());
        prev = rank;
        if k + weighted >= n || rank == m.min(p) {
            break;
        }
    }
    let mut q = Vec::new();
    let mut last = 0;
    for (j, r) in rho.iter().enumerate() {
        q.extend(std::iter::repeat_n(j + 1, r - last));
        last = *r;
    }
    LinearStructure {
        invertibility: classify_invertibility(prev, m, p),
        rho,
        q,
        thetas,
        r_rows,
        s_rows,
        p: ps,
        omega,
    }
}

pub fn linear_infinite_zeros(t: &LinearTriple, tol: f64) -> (Vec<usize>, Invertibility) {
    let s = linear_structure(t, tol);
    (s.q, s.invertibility)
}

/// `Some(r)` when every output row reaches the input and the decoupling
/// matrix is nonsingular.
pub fn vector_relative_degree(t: &LinearTriple, tol: f64) -> Result<Option<Vec<usize>>, LinError> {
    let (n, m, p) = (t.n(), t.m(), t.p());
    if m != p {
        return Err(LinError::NotSquare { m, p });
    }
    let mut r = Vec::with_capacity(p);
    let mut dec = DMatrix::zeros(p, m);
    for i in 0..p {
        let mut row = t.c.rows(i, 1).into_owned();
        let mut found = None;
        for k in 1..=n {
            let rb = &row * &t.b;
            if rb.norm() > tol * (1.0 + row.norm() * t.b.norm()) {
                found = Some(k);
                dec.row_mut(i).copy_from(&rb.row(0));
                break;
            }
            row = &row * &t.a;
        }
        match found {
            Some(k) => r.push(k),
            None => return Ok(None),
        }
    }
    Ok((numerics::rank(&dec, tol) == p).then_some(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn siso_double_integrator() {
        let t = LinearTriple::new(
            DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]),
            DMatrix::from_row_slice(2, 1, &[0., 1.]),
            DMatrix::from_row_slice(1, 2, &[1., 0.]),
        )
        .unwrap();
        assert_eq!(vector_relative_degree(&t, 1e-9).unwrap(), Some(vec![2]));
        assert_eq!(linear_infinite_zeros(&t, 1e-9).0, vec![2]);
    }
}
