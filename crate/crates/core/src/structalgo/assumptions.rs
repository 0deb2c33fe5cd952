use crate::symcore::{ad_power, involutive, jacobian, lie_bracket, Expr, SymMatrix, VectorField};
use crate::sysmodel::{numeric_rank, AffineSystem};

use super::normal_form::{chains_of, gamma_input};
use super::{NormalForm, StructError, StructureOutcome};

fn lie(e: impl std::fmt::Display) -> StructError {
    StructError::Eval(e.to_string())
}

/// `dΦ̄_d` has full row rank at every point. Passes without sampling when
/// every `P_k` is constant.
pub fn check_assumption_b(
    sys: &AffineSystem,
    out: &StructureOutcome,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<bool, StructError> {
    if out
        .steps
        .iter()
        .all(|s| s.p.entries().iter().all(|e| e.is_constant()))
    {
        return Ok(true);
    }
    let zeta: Vec<Expr> = chains_of(out)
        .iter()
        .flat_map(|c| {
            (0..c.q)
                .map(|j| out.theta(j)[c.theta_idx[j]].clone())
                .collect::<Vec<_>>()
        })
        .collect();
    let rep = numeric_rank(&jacobian(&zeta, &sys.states), &sys.states, points, tol)?;
    Ok(rep.constant && rep.rank == zeta.len())
}

/// `g_d = g Γ_i⁻¹ [0; I]` is involutive at every point.
pub fn check_assumption_c(
    sys: &AffineSystem,
    out: &StructureOutcome,
    gamma_ie: Option<&SymMatrix>,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<bool, StructError> {
    let (_, inv) = gamma_input(sys, out, gamma_ie)?;
    let m = sys.m();
    let cols: Vec<usize> = (m - out.m_d..m).collect();
    let g_d = sys.g.mul(&inv).select_cols(&cols);
    let fields: Vec<VectorField> = (0..g_d.ncols())
        .map(|j| VectorField {
            comps: g_d.col(j),
            states: sys.states.clone(),
        })
        .collect();
    involutive(&fields, points, tol).map_err(lie)
}

/// Builds the `Y_j^k` fields for a square invertible outcome and checks that
/// every pair commutes at every point.
pub fn check_assumption_d(
    sys: &AffineSystem,
    out: &StructureOutcome,
    nf: &NormalForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<bool, StructError> {
    let m_d = out.m_d;
    if !(out.m == m_d && out.p == m_d) {
        return Err(StructError::Eval(
            "assumption D needs a square invertible system".into(),
        ));
    }
    let states = &sys.states;
    let b_inv = out
        .b
        .inverse()
        .ok_or_else(|| StructError::Eval("b is singular".into()))?
        .map(|e| e.simplify());
    let gt = sys.g.mul(&b_inv).map(|e| e.simplify());
    let ft: Vec<Expr> = SymMatrix::column(sys.f.clone())
        .sub(&gt.mul(&SymMatrix::column(out.a.clone())))
        .col(0)
        .iter()
        .map(|e| e.simplify())
        .collect();
    let ft = VectorField {
        comps: ft,
        states: states.clone(),
    };
    let field = |j: usize| VectorField {
        comps: gt.col(j),
        states: states.clone(),
    };
    let q = &nf.q;

    // ys[j][k-1] = Y_{j+1}^k
    let mut ys: Vec<Vec<VectorField>> = vec![Vec::new(); m_d];
    for j in (0..m_d).rev() {
        let mut y1 = field(j).comps;
        for l in j + 1..m_d {
            for i in 2..=q[l] {
                let d = &nf.delta[l][q[l] - i][j];
                for (c, y) in y1.iter_mut().zip(&ys[l][i - 1].comps) {
                    *c = (&*c - &(d * y)).simplify();
                }
            }
        }
        let y1 = VectorField {
            comps: y1,
            states: states.clone(),
        };
        let mut list = Vec::with_capacity(q[j]);
        for k in 1..=q[j] {
            let mut y = ad_power(&ft, &y1, k - 1).map_err(lie)?;
            if k % 2 == 0 {
                y.comps = y.comps.iter().map(|c| -c).collect();
            }
            list.push(y);
        }
        ys[j] = list;
    }
    let all: Vec<&VectorField> = ys.iter().flatten().collect();
    for a in 0..all.len() {
        for b in a + 1..all.len() {
            let br = lie_bracket(all[a], all[b]).map_err(lie)?;
            for x in points {
                let v = br.eval(x).map_err(lie)?;
                let scale = all[a]
                    .eval(x)
                    .map_err(lie)?
                    .iter()
                    .chain(&all[b].eval(x).map_err(lie)?)
                    .fold(1.0f64, |s, v| s.max(v.abs()));
                if v.iter().any(|c| c.is_finite() && c.abs() > tol * scale) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
