use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::numerics;
use crate::symcore::{is_zero, jacobian, Expr, Sym, SymMatrix};
use crate::sysmodel::AffineSystem;

use super::select::eval_at;
use super::{StructError, StructureOutcome};

#[derive(Debug, Clone, Default)]
pub struct NormalFormOptions {
    /// User `Φ_e`; verified, not solved for.
    pub phi_e: Option<Vec<Expr>>,
    /// Rows completing `b` to an invertible `Γ_i = [Γ_ie; b]`.
    pub gamma_ie: Option<SymMatrix>,
}

/// One integrator chain. `theta_idx[j-1]` indexes `Θ_{j−1}` for `ξ_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub q: usize,
    pub theta_idx: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NormalForm {
    pub states: Vec<Sym>,
    pub q: Vec<usize>,
    pub chains: Vec<Chain>,
    pub xi_names: Vec<Vec<Sym>>,
    /// `ξ_{i,j}` as functions of `x`.
    pub xi: Vec<Vec<Expr>>,
    pub eta_names: Vec<Sym>,
    pub phi_e: Vec<Expr>,
    pub phi_e_user: bool,
    /// `x` in terms of `(η, ξ)`, when the triangular solver succeeds.
    pub inverse: Option<Vec<Expr>>,
    /// `δ_{i,j,l}` in `x`, indexed `[i][j-1][l]` for `j < q_i`.
    pub delta: Vec<Vec<Vec<Expr>>>,
    /// Zero-output only: `σ_{i,j}` rows, indexed `[i][j-1]`.
    pub sigma: Option<Vec<Vec<Vec<Expr>>>>,
    /// `v_d = a + b u`.
    pub a: Vec<Expr>,
    pub b: SymMatrix,
    /// `[Γ_ie; b]`.
    pub gamma_i: SymMatrix,
    pub gamma_i_inv: SymMatrix,
    /// Outputs starting a chain, then the remaining ones.
    pub outputs_d: Vec<usize>,
    pub outputs_e: Vec<usize>,
    /// `η̇ = f_e + g_e u_e + φ v_d` in `x`.
    pub f_e: Vec<Expr>,
    pub g_e: SymMatrix,
    pub phi: SymMatrix,
    pub h_e: Vec<Expr>,
    pub warnings: Vec<String>,
}

impl NormalForm {
    pub fn n_d(&self) -> usize {
        self.q.iter().sum()
    }

    /// Expression in `x` rewritten in `(η, ξ)`.
    pub fn to_nf(&self, e: &Expr) -> Option<Expr> {
        let inv = self.inverse.as_ref()?;
        let map: HashMap<Sym, Expr> = self
            .states
            .iter()
            .cloned()
            .zip(inv.iter().cloned())
            .collect();
        Some(e.subs(&map))
    }

    /// `δ_{i,j,l}` with 1-based indices, in `(η, ξ)` when available.
    pub fn delta_nf(&self, i: usize, j: usize, l: usize) -> Option<Expr> {
        let d = self.delta.get(i - 1)?.get(j - 1)?.get(l - 1)?;
        self.to_nf(d)
    }

    /// `δ_{i,j,l} ≡ 0` whenever `j < q_l`.
    pub fn sparsity_holds(&self) -> bool {
        self.delta.iter().all(|rows| {
            rows.iter().enumerate().all(|(j0, row)| {
                row.iter()
                    .enumerate()
                    .all(|(l, d)| j0 + 1 >= self.q[l] || is_zero(d))
            })
        })
    }

    /// `L_{g_d} Φ_e ≡ 0`.
    pub fn annihilates(&self) -> bool {
        self.phi.is_zero()
    }

    /// All new coordinate names in order `(η, ξ)`.
    pub fn coordinate_names(&self) -> Vec<Sym> {
        let mut v = self.eta_names.clone();
        v.extend(self.xi_names.iter().flatten().cloned());
        v
    }

    pub fn chart(&self) -> Vec<Expr> {
        let mut v = self.phi_e.clone();
        v.extend(self.xi.iter().flatten().cloned());
        v
    }
}

fn sym(s: String) -> Sym {
    Sym::from(s.as_str())
}

pub(crate) fn chains_of(out: &StructureOutcome) -> Vec<Chain> {
    let mut chains = Vec::new();
    for st in &out.steps {
        for &t in &st.r_rows {
            let l = st.k;
            let mut idx = vec![0; l];
            idx[l - 1] = t;
            for j in (1..l).rev() {
                idx[j - 1] = out.steps[j - 1].s_rows[idx[j]];
            }
            chains.push(Chain {
                q: l,
                theta_idx: idx,
            });
        }
    }
    chains
}

/// Solves `Φ(x) = z` for `x` one variable at a time, each from an equation
/// affine in it with a coefficient free of the unsolved states.
pub fn invert_chart(chart: &[Expr], names: &[Sym], states: &[Sym]) -> Option<Vec<Expr>> {
    let mut eqs: Vec<Option<Expr>> = chart
        .iter()
        .zip(names)
        .map(|(c, z)| Some(c - &Expr::sym(z)))
        .collect();
    let mut solved: HashMap<Sym, Expr> = HashMap::new();
    while solved.len() < states.len() {
        let mut progress = false;
        for slot in eqs.iter_mut() {
            let Some(e) = slot.as_ref() else { continue };
            let e = e.subs(&solved);
            let unknown: Vec<Sym> = states
                .iter()
                .filter(|s| !solved.contains_key(*s) && e.contains_var(s))
                .cloned()
                .collect();
            match unknown.len() {
                0 => *slot = None,
                1 => {
                    let v = &unknown[0];
                    let Some((a0, a1)) = e.affine_in(v) else {
                        continue;
                    };
                    if is_zero(&a1) {
                        continue;
                    }
                    solved.insert(v.clone(), (-(a0 / a1)).simplify());
                    *slot = None;
                    progress = true;
                }
                _ => {}
            }
        }
        if !progress {
            return None;
        }
    }
    Some(states.iter().map(|s| solved[s].clone()).collect())
}

fn greedy_rows(
    base: &DMatrix<f64>,
    cand: &[(usize, Vec<f64>)],
    need: usize,
    tol: f64,
) -> Vec<usize> {
    let ncol = base.ncols();
    let mut cur = base.clone();
    let mut picked = Vec::new();
    for (i, row) in cand {
        if picked.len() == need {
            break;
        }
        let mut trial = cur.clone().insert_row(cur.nrows(), 0.0);
        for c in 0..ncol {
            trial[(cur.nrows(), c)] = row[c];
        }
        if numerics::rank(&trial, tol) > numerics::rank(&cur, tol) {
            cur = trial;
            picked.push(*i);
        }
    }
    picked
}

/// `Γ_i = [Γ_ie; b]` and its inverse; `Γ_ie` defaults to unit rows
/// completing `b` at the origin.
pub(crate) fn gamma_input(
    sys: &AffineSystem,
    out: &StructureOutcome,
    user: Option<&SymMatrix>,
) -> Result<(SymMatrix, SymMatrix), StructError> {
    let m = sys.m();
    let m_d = out.m_d;
    let b = &out.b;
    let gamma_ie = match user {
        Some(g) => {
            if g.nrows() != m - m_d || g.ncols() != m {
                return Err(StructError::Completion(format!(
                    "Γ_ie must be {}×{m}",
                    m - m_d
                )));
            }
            g.clone()
        }
        None => {
            let bb = if m_d == 0 {
                DMatrix::zeros(0, m)
            } else {
                eval_at(b, &sys.states, &vec![0.0; sys.n()])?
            };
            let cand: Vec<(usize, Vec<f64>)> = (0..m)
                .map(|j| (j, (0..m).map(|c| if c == j { 1.0 } else { 0.0 }).collect()))
                .collect();
            let rows = greedy_rows(&bb, &cand, m - m_d, 1e-8);
            SymMatrix::from_fn(rows.len(), m, |r, c| {
                if rows[r] == c {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            })
        }
    };
    let gamma_i = gamma_ie.vstack(b);
    let inv = gamma_i
        .inverse()
        .ok_or_else(|| StructError::Completion("Γ_i is singular".into()))?;
    Ok((gamma_i, inv.map(|e| e.simplify())))
}

pub fn build_normal_form(
    sys: &AffineSystem,
    out: &StructureOutcome,
    opts: &NormalFormOptions,
) -> Result<NormalForm, StructError> {
    let (n, m) = (sys.n(), sys.m());
    let states = sys.states.clone();
    let origin = vec![0.0; n];
    let tol = 1e-8;
    let chains = chains_of(out);
    let q: Vec<usize> = chains.iter().map(|c| c.q).collect();
    let m_d = chains.len();
    let n_d: usize = q.iter().sum();
    let mut warnings = Vec::new();

    let xi_names: Vec<Vec<Sym>> = chains
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (1..=c.q)
                .map(|j| sym(format!("xi{}_{}", i + 1, j)))
                .collect()
        })
        .collect();
    let xi: Vec<Vec<Expr>> = chains
        .iter()
        .map(|c| {
            (0..c.q)
                .map(|j| out.theta(j)[c.theta_idx[j]].clone())
                .collect()
        })
        .collect();

    let mut delta = Vec::with_capacity(m_d);
    let mut sigma = out
        .steps
        .first()
        .and_then(|s| s.w.as_ref())
        .map(|_| Vec::with_capacity(m_d));
    for c in &chains {
        let mut rows = Vec::new();
        let mut srows = Vec::new();
        for j in 1..c.q {
            let st = &out.steps[j - 1];
            let r = c.theta_idx[j];
            rows.push(
                (0..m_d)
                    .map(|l| {
                        if l < st.rho {
                            st.p.get(r, l).clone()
                        } else {
                            Expr::zero()
                        }
                    })
                    .collect::<Vec<_>>(),
            );
            if let Some(w) = &st.w {
                srows.push(w.row(r));
            }
        }
        delta.push(rows);
        if let Some(s) = sigma.as_mut() {
            s.push(srows);
        }
    }

    let outputs_d: Vec<usize> = chains.iter().map(|c| c.theta_idx[0]).collect();
    let outputs_e: Vec<usize> = (0..sys.p()).filter(|i| !outputs_d.contains(i)).collect();

    let b = out.b.clone();
    let (gamma_i, gamma_i_inv) = gamma_input(sys, out, opts.gamma_ie.as_ref())?;
    let g_gi = sys.g.mul(&gamma_i_inv);
    let ue_cols: Vec<usize> = (0..m - m_d).collect();
    let vd_cols: Vec<usize> = (m - m_d..m).collect();
    let g_d = g_gi.select_cols(&vd_cols);

    // Φ_e
    let phi_d: Vec<Expr> = xi.iter().flatten().cloned().collect();
    let d_phi_d = if n_d == 0 {
        DMatrix::zeros(0, n)
    } else {
        eval_at(&jacobian(&phi_d, &states), &states, &origin)?
    };
    let (phi_e, phi_e_user) = match &opts.phi_e {
        Some(pe) => {
            if pe.len() != n - n_d {
                return Err(StructError::Completion(format!(
                    "Φ_e needs {} components, got {}",
                    n - n_d,
                    pe.len()
                )));
            }
            (pe.clone(), true)
        }
        None => {
            let zero_row: Vec<bool> = (0..n).map(|i| g_d.row(i).iter().all(is_zero)).collect();
            let mut order: Vec<usize> = (0..n).filter(|&i| zero_row[i]).collect();
            order.extend((0..n).filter(|&i| !zero_row[i]));
            let cand: Vec<(usize, Vec<f64>)> = order
                .iter()
                .map(|&i| (i, (0..n).map(|c| if c == i { 1.0 } else { 0.0 }).collect()))
                .collect();
            let mut picked = greedy_rows(&d_phi_d, &cand, n - n_d, tol);
            if picked.len() < n - n_d {
                return Err(StructError::Completion(
                    "no coordinate subset completes dΦ_d".into(),
                ));
            }
            picked.sort_unstable();
            let mut pe: Vec<Expr> = picked.iter().map(|&i| Expr::sym(&states[i])).collect();
            if m_d > 0 && g_d.entries().iter().all(|e| e.is_constant()) {
                // η̄ = η − Σ_l φ_l ξ_{l,q_l} annihilates the constant g_d
                let grad = jacobian(&pe, &states).mul(&g_d);
                for (r, e) in pe.iter_mut().enumerate() {
                    let mut shifted = e.clone();
                    for (l, x) in xi.iter().enumerate() {
                        shifted = shifted - grad.get(r, l) * x.last().unwrap();
                    }
                    *e = shifted.simplify();
                }
            }
            (pe, false)
        }
    };
    let mut chart = phi_e.clone();
    chart.extend(phi_d.iter().cloned());
    let d_chart = eval_at(&jacobian(&chart, &states), &states, &origin)?;
    if numerics::rank(&d_chart, tol) < n {
        return Err(StructError::Completion("dΦ is singular at x=0".into()));
    }

    let eta_names: Vec<Sym> = (1..=n - n_d).map(|k| sym(format!("eta{k}"))).collect();
    let mut names = eta_names.clone();
    names.extend(xi_names.iter().flatten().cloned());
    let inverse = invert_chart(&chart, &names, &states);
    if inverse.is_none() {
        warnings.push(
            "Φ⁻¹ has no closed form from the triangular solver; normal-form terms are given in x"
                .into(),
        );
    }

    let d_phi_e = jacobian(&phi_e, &states);
    let a_col = SymMatrix::column(out.a.clone());
    let zero_ue = SymMatrix::zeros(m - m_d, 1);
    let drift =
        SymMatrix::column(sys.f.clone()).sub(&sys.g.mul(&gamma_i_inv).mul(&zero_ue.vstack(&a_col)));
    let f_e = d_phi_e.mul(&drift).map(|e| e.simplify()).col(0);
    let g_e = d_phi_e
        .mul(&g_gi.select_cols(&ue_cols))
        .map(|e| e.simplify());
    let phi = d_phi_e.mul(&g_d).map(|e| e.simplify());
    if phi_e_user && !phi.is_zero() {
        warnings
            .push("user Φ_e does not satisfy L_{g_d}Φ_e ≡ 0; residual φ terms are reported".into());
    }
    let h_e: Vec<Expr> = outputs_e.iter().map(|&i| sys.h[i].clone()).collect();

    Ok(NormalForm {
        states,
        q,
        chains,
        xi_names,
        xi,
        eta_names,
        phi_e,
        phi_e_user,
        inverse,
        delta,
        sigma,
        a: out.a.clone(),
        b,
        gamma_i,
        gamma_i_inv,
        outputs_d,
        outputs_e,
        f_e,
        g_e,
        phi,
        h_e,
        warnings,
    })
}
