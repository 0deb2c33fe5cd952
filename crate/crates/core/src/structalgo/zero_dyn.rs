use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::numerics;
use crate::symcore::{jacobian, Expr, Sym, SymMatrix};

use super::NormalForm;

const TOL: f64 = 1e-9;

/// `z = T⁻¹ η` with `T = [Z_a | Z_b | Z_c]`: `Z_c` spans the controllable
/// subspace, `Z_a` completes (controllable ∩ unobservable) inside the
/// unobservable subspace.
#[derive(Debug, Clone)]
pub struct AbcSplit {
    pub dims: (usize, usize, usize),
    pub t: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Top-left `dims.0 × dims.0` block of `T⁻¹AT`; `ż_a = A_aa z_a`.
    pub a_aa: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ZeroDynamics {
    pub eta: Vec<Sym>,
    /// `f_e(η, 0)`.
    pub f0: Vec<Expr>,
    /// `g_e(η, 0)`.
    pub g0: SymMatrix,
    /// `h_e(η, 0)`.
    pub h0: Vec<Expr>,
    /// No `u_e` and no `y_e`: `η̇ = f0` is the zero dynamics itself.
    pub direct: bool,
    /// `(A, B, C)` when `f0`, `g0`, `h0` are linear.
    pub linear: Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>,
    pub split: Option<AbcSplit>,
    pub warnings: Vec<String>,
}

fn constant(m: &SymMatrix) -> Option<DMatrix<f64>> {
    if !m.entries().iter().all(|e| e.is_constant()) {
        return None;
    }
    m.eval(&[], &[]).ok()
}

pub fn zero_dynamics(nf: &NormalForm) -> ZeroDynamics {
    let eta = nf.eta_names.clone();
    let direct = nf.g_e.ncols() == 0 && nf.h_e.is_empty();
    let Some(inv) = nf.inverse.as_ref() else {
        return ZeroDynamics {
            eta,
            f0: Vec::new(),
            g0: SymMatrix::zeros(0, 0),
            h0: Vec::new(),
            direct,
            linear: None,
            split: None,
            warnings: vec!["no closed-form Φ⁻¹; zero dynamics not extracted".into()],
        };
    };
    let mut map: HashMap<Sym, Expr> = HashMap::new();
    let xi_zero: HashMap<Sym, Expr> = nf
        .xi_names
        .iter()
        .flatten()
        .map(|s| (s.clone(), Expr::zero()))
        .collect();
    for (s, e) in nf.states.iter().zip(inv) {
        map.insert(s.clone(), e.subs(&xi_zero).simplify());
    }
    let at = |e: &Expr| e.subs(&map).simplify();
    let f0: Vec<Expr> = nf.f_e.iter().map(at).collect();
    let g0 = nf.g_e.map(at);
    let h0: Vec<Expr> = nf.h_e.iter().map(at).collect();

    let a = constant(&jacobian(&f0, &eta));
    let b = constant(&g0);
    let c = constant(&jacobian(&h0, &eta));
    let linear = match (a, b, c) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };
    let split = if direct {
        None
    } else {
        linear.as_ref().map(|(a, b, c)| abc_split(a, b, c))
    };
    ZeroDynamics {
        eta,
        f0,
        g0,
        h0,
        direct,
        linear,
        split,
        warnings: Vec::new(),
    }
}

fn hcat(blocks: &[DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

pub fn abc_split(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> AbcSplit {
    let n = a.nrows();
    let mut ctrb = Vec::new();
    let mut blk = b.clone();
    for _ in 0..n {
        ctrb.push(blk.clone());
        blk = a * blk;
    }
    let vc = numerics::range_basis(&hcat(&ctrb, n), TOL);
    let mut obsv = DMatrix::zeros(0, n);
    let mut blk = c.clone();
    for _ in 0..n {
        obsv = DMatrix::from_fn(obsv.nrows() + blk.nrows(), n, |i, j| {
            if i < obsv.nrows() {
                obsv[(i, j)]
            } else {
                blk[(i - obsv.nrows(), j)]
            }
        });
        blk = &blk * a;
    }
    let vn = numerics::null_basis(&obsv, TOL);
    let vcn = numerics::intersect(&vc, &vn, TOL);
    let units: Vec<DMatrix<f64>> = (0..n)
        .map(|i| DMatrix::from_fn(n, 1, |r, _| if r == i { 1.0 } else { 0.0 }))
        .filter(|e| (&obsv * e).norm() <= TOL)
        .collect();
    let mut cand = units.clone();
    cand.push(vn.clone());
    let za = numerics::complete_basis(&vcn, &hcat(&cand, n), TOL);
    let zb = numerics::complete_basis(
        &hcat(&[za.clone(), vc.clone()], n),
        &DMatrix::identity(n, n),
        TOL,
    );
    let t = hcat(&[za.clone(), zb.clone(), vc.clone()], n);
    let tinv = t
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::zeros(n, n));
    let at = &tinv * a * &t;
    let da = za.ncols();
    AbcSplit {
        dims: (da, zb.ncols(), vc.ncols()),
        a_aa: at.view((0, 0), (da, da)).into_owned(),
        b: &tinv * b,
        c: c * &t,
        a: at,
        t,
    }
}
