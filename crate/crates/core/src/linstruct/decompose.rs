use nalgebra::{Complex, DMatrix};

use crate::numerics;
use crate::structalgo::{abc_split, Invertibility};

use super::algo::linear_structure;
use super::LinearTriple;

const COND_WARN: f64 = 1e12;

/// `x = T_s z`, `u = T_i [u_e; v_d] + F x`, `y = T_o [y_e; y_d]` with the
/// state ordered `z = (η, ξ_{1,1..q_1}, …)`.
#[derive(Debug, Clone)]
pub struct LinearDecomposition {
    pub q: Vec<usize>,
    pub invertibility: Invertibility,
    pub t_s: DMatrix<f64>,
    pub t_i: DMatrix<f64>,
    pub t_o: DMatrix<f64>,
    pub feedback: DMatrix<f64>,
    pub transformed: LinearTriple,
    /// `δ_{i,j,l}` indexed `[i][j-1][l]` for `j < q_i`.
    pub delta: Vec<Vec<Vec<f64>>>,
    pub n_eta: usize,
    pub m_e: usize,
    pub p_e: usize,
    /// Dimension of the controllable and observable part of `(A11, B1, C1)`.
    pub co_dim: usize,
    /// Eigenvalues of the uncontrollable, unobservable part of `(A11, B1, C1)`.
    pub finite_zeros: Vec<Complex<f64>>,
    /// Condition numbers of `T_s`, `T_i`, `T_o`.
    pub cond: [f64; 3],
    /// Block-pattern entries exceeding tolerance.
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl LinearDecomposition {
    pub fn pattern_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Undoes the transformations.
    pub fn reconstruct(&self) -> LinearTriple {
        let t = &self.transformed;
        let ts_inv = self.t_s.clone().try_inverse().unwrap();
        let ti_inv = self.t_i.clone().try_inverse().unwrap();
        let b = &self.t_s * &t.b * ti_inv;
        let a = &self.t_s * &t.a * &ts_inv - &b * &self.feedback;
        let c = &self.t_o * &t.c * ts_inv;
        LinearTriple { a, b, c }
    }

    pub fn sparsity_holds(&self, tol: f64) -> bool {
        self.delta.iter().all(|rows| {
            rows.iter().enumerate().all(|(j0, r)| {
                r.iter()
                    .enumerate()
                    .all(|(l, d)| j0 + 1 >= self.q[l] || d.abs() <= tol)
            })
        })
    }
}

fn cond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn unit(n: usize, i: usize) -> DMatrix<f64> {
    DMatrix::from_fn(1, n, |_, j| if i == j { 1.0 } else { 0.0 })
}

fn vstack(parts: &[DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(p);
        at += p.nrows();
    }
    out
}

/// Rows of `cand` that raise the rank of `base`, greedily, up to `need`.
fn complete_rows(
    base: &DMatrix<f64>,
    cand: &[DMatrix<f64>],
    need: usize,
    tol: f64,
) -> Vec<DMatrix<f64>> {
    let cols = base.ncols();
    let mut cur = base.clone();
    let mut picked = Vec::new();
    for c in cand {
        if picked.len() == need {
            break;
        }
        let trial = vstack(&[cur.clone(), c.clone()], cols);
        if numerics::rank(&trial, tol) > numerics::rank(&cur, tol) {
            cur = trial;
            picked.push(c.clone());
        }
    }
    picked
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub fn decompose(t: &LinearTriple, tol: f64) -> LinearDecomposition {
    let (n, m, p) = (t.n(), t.m(), t.p());
    let s = linear_structure(t, tol);
    let chains = s.chains();
    let q: Vec<usize> = chains.iter().map(|c| c.len()).collect();
    let m_d = chains.len();
    let n_d: usize = q.iter().sum();
    let n_e = n - n_d;
    let mut warnings = Vec::new();

    let xi_rows: Vec<DMatrix<f64>> = chains
        .iter()
        .flat_map(|c| (1..=c.len()).map(|j| s.xi_row(c, j)).collect::<Vec<_>>())
        .collect();
    let xi = vstack(&xi_rows, n);
    let b = &s.omega * &t.b;
    let a = &s.omega * &t.a;

    let units_m: Vec<DMatrix<f64>> = (0..m).map(|i| unit(m, i)).collect();
    let gamma_ie = vstack(&complete_rows(&b, &units_m, m - m_d, tol), m);
    let gamma_i = vstack(&[gamma_ie, b.clone()], m);
    let t_i = gamma_i
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(m, m));
    let g_d = &t.b * t_i.columns(m - m_d, m_d);

    // η rows annihilate g_d; unit rows first for readable coordinates
    let mut cand: Vec<DMatrix<f64>> = (0..n)
        .map(|i| unit(n, i))
        .filter(|e| (e * &g_d).norm() <= tol)
        .collect();
    let left_null = numerics::null_basis(&g_d.transpose(), tol).transpose();
    cand.extend((0..left_null.nrows()).map(|i| left_null.rows(i, 1).into_owned()));
    let mut e_rows = complete_rows(&xi, &cand, n_e, tol);
    if e_rows.len() < n_e {
        warnings.push("no η coordinates annihilate g_d; completing with unit rows".into());
        let mut base = vstack(std::slice::from_ref(&xi), n);
        for r in &e_rows {
            base = vstack(&[base, r.clone()], n);
        }
        let extra = complete_rows(
            &base,
            &(0..n).map(|i| unit(n, i)).collect::<Vec<_>>(),
            n_e - e_rows.len(),
            tol,
        );
        e_rows.extend(extra);
    }
    let e = vstack(&e_rows, n);
    let phi = vstack(&[e, xi], n);
    let ts0 = phi
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(n, n));

    let mut a_rows = DMatrix::zeros(m, n);
    if m_d > 0 {
        a_rows.view_mut((m - m_d, 0), (m_d, n)).copy_from(&a);
    }
    let feedback = -(&t_i * a_rows);
    let acl = &t.a + &t.b * &feedback;
    let a0 = &phi * &acl * &ts0;
    let b0 = &phi * &t.b * &t_i;

    // η̃ = η − K ξ removes ξ_{i,j≥2} and v_d from the η equation
    let mmat = a0.view((0, 0), (n_e, n_e)).into_owned();
    let nmat = a0.view((0, n_e), (n_e, n_d)).into_owned();
    let vmat = b0.view((0, m - m_d), (n_e, m_d)).into_owned();
    let jmat = a0.view((n_e, n_e), (n_d, n_d)).into_owned();
    let dmat = b0.view((n_e, m - m_d), (n_d, m_d)).into_owned();
    let mut level1 = Vec::new();
    let mut at = 0;
    for qi in &q {
        level1.push(at);
        at += qi;
    }
    let k = if n_e > 0 && n_d > 0 {
        let id_e = DMatrix::identity(n_e, n_e);
        let lhs_a = kron(&DMatrix::identity(n_d, n_d), &mmat) - kron(&jmat.transpose(), &id_e);
        let lhs_v = kron(&dmat.transpose(), &id_e);
        let mut rows_l = Vec::new();
        let mut rows_r = Vec::new();
        for c in 0..n_d {
            if level1.contains(&c) {
                continue;
            }
            for r in 0..n_e {
                rows_l.push(lhs_a.rows(c * n_e + r, 1).into_owned());
                rows_r.push(-nmat[(r, c)]);
            }
        }
        for c in 0..m_d {
            for r in 0..n_e {
                rows_l.push(lhs_v.rows(c * n_e + r, 1).into_owned());
                rows_r.push(vmat[(r, c)]);
            }
        }
        let lhs = vstack(&rows_l, n_e * n_d);
        let rhs = DMatrix::from_column_slice(rows_r.len(), 1, &rows_r);
        match numerics::lstsq(&lhs, &rhs, 1e-12) {
            Some(vk) => DMatrix::from_column_slice(n_e, n_d, vk.as_slice()),
            None => DMatrix::zeros(n_e, n_d),
        }
    } else {
        DMatrix::zeros(n_e, n_d)
    };
    let mut shift = DMatrix::identity(n, n);
    shift.view_mut((0, n_e), (n_e, n_d)).copy_from(&k);
    let t_s = &ts0 * shift;
    let ts_inv = t_s
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(n, n));

    let outputs_d: Vec<usize> = chains.iter().map(|c| c[0]).collect();
    let outputs_e: Vec<usize> = (0..p).filter(|i| !outputs_d.contains(i)).collect();
    let cts = &t.c * &t_s;
    let sel = |idx: &[usize]| vstack(&idx.iter().map(|&i| unit(p, i)).collect::<Vec<_>>(), p);
    let (sel_e, sel_d) = (sel(&outputs_e), sel(&outputs_d));
    let l = DMatrix::from_fn(outputs_e.len(), m_d, |r, c| {
        cts[(outputs_e[r], n_e + level1[c])]
    });
    let gamma_o = vstack(&[&sel_e - &l * &sel_d, sel_d], p);
    let t_o = gamma_o
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(p, p));

    let at_ = &ts_inv * &acl * &t_s;
    let bt = &ts_inv * &t.b * &t_i;
    let ct = &gamma_o * &t.c * &t_s;

    let scale = 1.0 + t.a.norm() + t.b.norm() + t.c.norm();
    let eps = 1e-9 * scale;
    let mut violations = Vec::new();
    let mut check = |what: &str, v: f64, want: f64| {
        if (v - want).abs() > eps {
            violations.push(format!("{what}: {v:.3e}, expected {want}"));
        }
    };
    for r in 0..n_e {
        for c in 0..n_d {
            if !level1.contains(&c) {
                check(&format!("A[η{r}, ξ col {c}]"), at_[(r, n_e + c)], 0.0);
            }
        }
        for c in 0..m_d {
            check(&format!("B[η{r}, v{c}]"), bt[(r, m - m_d + c)], 0.0);
        }
    }
    let mut delta = Vec::with_capacity(m_d);
    for (i, qi) in q.iter().enumerate() {
        let mut rows = Vec::new();
        for j in 1..=*qi {
            let row = n_e + level1[i] + j - 1;
            for c in 0..n {
                let want = if j < *qi && c == row + 1 { 1.0 } else { 0.0 };
                check(&format!("A[ξ{}_{j}, {c}]", i + 1), at_[(row, c)], want);
            }
            for c in 0..m - m_d {
                check(&format!("B[ξ{}_{j}, u_e{c}]", i + 1), bt[(row, c)], 0.0);
            }
            if j == *qi {
                for c in 0..m_d {
                    check(
                        &format!("B[ξ{}_{j}, v{c}]", i + 1),
                        bt[(row, m - m_d + c)],
                        if c == i { 1.0 } else { 0.0 },
                    );
                }
            } else {
                rows.push((0..m_d).map(|c| bt[(row, m - m_d + c)]).collect());
            }
        }
        delta.push(rows);
    }
    let p_e = outputs_e.len();
    for r in 0..p {
        for c in 0..n_d {
            let want = if r >= p_e && c == level1[r - p_e] {
                1.0
            } else {
                0.0
            };
            check(&format!("C[{r}, ξ col {c}]"), ct[(r, n_e + c)], want);
        }
        if r >= p_e {
            for c in 0..n_e {
                check(&format!("C[y_d{}, η{c}]", r - p_e), ct[(r, c)], 0.0);
            }
        }
    }

    let a11 = at_.view((0, 0), (n_e, n_e)).into_owned();
    let b1 = bt.view((0, 0), (n_e, m - m_d)).into_owned();
    let c1 = ct.view((0, 0), (p_e, n_e)).into_owned();
    let (co_dim, finite_zeros) = if n_e == 0 {
        (0, Vec::new())
    } else {
        let mut ctrb = b1.clone();
        let mut blk = b1.clone();
        for _ in 1..n_e {
            blk = &a11 * blk;
            ctrb = DMatrix::from_fn(n_e, ctrb.ncols() + blk.ncols(), |i, j| {
                if j < ctrb.ncols() {
                    ctrb[(i, j)]
                } else {
                    blk[(i, j - ctrb.ncols())]
                }
            });
        }
        let mut obsv = c1.clone();
        let mut blk = c1.clone();
        for _ in 1..n_e {
            blk = &blk * &a11;
            obsv = vstack(&[obsv, blk.clone()], n_e);
        }
        let co = numerics::rank(&(&obsv * &ctrb), tol);
        let split = abc_split(&a11, &b1, &c1);
        (
            co,
            split.a_aa.complex_eigenvalues().iter().cloned().collect(),
        )
    };

    let cond = [cond(&t_s), cond(&t_i), cond(&t_o)];
    if cond.iter().any(|c| *c > COND_WARN) {
        warnings.push(format!("ill-conditioned transformation: cond = {cond:?}"));
    }
    LinearDecomposition {
        q: s.q.clone(),
        invertibility: s.invertibility,
        t_s,
        t_i,
        t_o,
        feedback,
        transformed: LinearTriple {
            a: at_,
            b: bt,
            c: ct,
        },
        delta,
        n_eta: n_e,
        m_e: m - m_d,
        p_e,
        co_dim,
        finite_zeros,
        cond,
        violations,
        warnings,
    }
}
