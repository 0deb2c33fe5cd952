use nalgebra::DMatrix;

use crate::numerics;
use crate::symcore::{Sym, SymMatrix};
use crate::sysmodel::numeric_rank;

use super::StructError;

/// How `P_k` was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PMethod {
    /// `P = C[:, J] · B[:, J]⁻¹` for the listed columns `J`.
    ColumnMinor(Vec<usize>),
    /// `P = C Bᵀ (B Bᵀ)⁻¹`.
    Gram,
}

pub(crate) fn eval_at(m: &SymMatrix, vars: &[Sym], x: &[f64]) -> Result<DMatrix<f64>, StructError> {
    m.eval(vars, x)
        .map_err(|e| StructError::Eval(e.to_string()))
}

fn full_rank_everywhere(
    m: &SymMatrix,
    vars: &[Sym],
    points: &[Vec<f64>],
    want: usize,
    tol: f64,
) -> Result<bool, StructError> {
    if want == 0 {
        return Ok(true);
    }
    let rep = numeric_rank(m, vars, points, tol)?;
    Ok(rep.constant && rep.rank == want)
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 && cur[0] == n - k {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Greedy indices (rows when `rows`, else columns) that raise the rank of
/// `base` at the base point, in index order, up to `need` of them.
fn greedy(base: &DMatrix<f64>, cand: &DMatrix<f64>, need: usize, tol: f64) -> Vec<usize> {
    let mut cur = base.clone();
    let mut picked = Vec::new();
    for i in 0..cand.nrows() {
        if picked.len() == need {
            break;
        }
        let mut trial = DMatrix::zeros(cur.nrows() + 1, cand.ncols());
        if cur.nrows() > 0 {
            trial
                .view_mut((0, 0), (cur.nrows(), cand.ncols()))
                .copy_from(&cur);
        }
        trial.row_mut(cur.nrows()).copy_from(&cand.row(i));
        if numerics::rank(&trial, tol) > numerics::rank(&cur, tol) {
            cur = trial;
            picked.push(i);
        }
    }
    picked
}

/// Picks `R_k` (rows of `L_gΘ_{k−1}` joining `L_gΩ_{k−1}`) by greedy
/// pivoting at `points[0]`, verified at every point; falls back to an
/// exhaustive search. `S_k` is the complement.
pub fn select_rs(
    lg_omega: &SymMatrix,
    lg_theta: &SymMatrix,
    need: usize,
    vars: &[Sym],
    points: &[Vec<f64>],
    tol: f64,
    step: usize,
) -> Result<(Vec<usize>, Vec<usize>), StructError> {
    let rows = lg_theta.nrows();
    let complement = |r: &[usize]| (0..rows).filter(|i| !r.contains(i)).collect::<Vec<_>>();
    if need == 0 {
        return Ok((Vec::new(), (0..rows).collect()));
    }
    let want = lg_omega.nrows() + need;
    let base_o = eval_at(lg_omega, vars, &points[0])?;
    let base_t = eval_at(lg_theta, vars, &points[0])?;
    let base_o = if lg_omega.nrows() == 0 {
        DMatrix::zeros(0, lg_theta.ncols())
    } else {
        base_o
    };
    let g = greedy(&base_o, &base_t, need, tol);
    if g.len() == need
        && full_rank_everywhere(
            &lg_omega.vstack(&lg_theta.select_rows(&g)),
            vars,
            points,
            want,
            tol,
        )?
    {
        let s = complement(&g);
        return Ok((g, s));
    }
    for r in combinations(rows, need) {
        if r == g {
            continue;
        }
        if full_rank_everywhere(
            &lg_omega.vstack(&lg_theta.select_rows(&r)),
            vars,
            points,
            want,
            tol,
        )? {
            let s = complement(&r);
            return Ok((r, s));
        }
    }
    Err(StructError::NotRegular {
        step,
        reason: "no constant 0/1 row selection R_k keeps the stack at full row rank at all samples; try a user-supplied R_k"
            .into(),
    })
}

/// Solves `P · B = C` for `P`, with `B` of full row rank at every point.
pub fn solve_p(
    b: &SymMatrix,
    c: &SymMatrix,
    vars: &[Sym],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<(SymMatrix, PMethod), StructError> {
    let rho = b.nrows();
    if rho == 0 || c.nrows() == 0 {
        return Ok((
            SymMatrix::zeros(c.nrows(), rho),
            PMethod::ColumnMinor(Vec::new()),
        ));
    }
    let base = eval_at(b, vars, &points[0])?.transpose();
    let g = greedy(&DMatrix::zeros(0, rho), &base, rho, tol);
    let mut tried = Vec::new();
    if g.len() == rho {
        tried.push(g.clone());
    }
    for cols in combinations(b.ncols(), rho) {
        if cols != g {
            tried.push(cols);
        }
    }
    for cols in tried {
        let minor = b.select_cols(&cols);
        if !full_rank_everywhere(&minor, vars, points, rho, tol)? {
            continue;
        }
        if let Some(inv) = minor.inverse() {
            return Ok((c.select_cols(&cols).mul(&inv), PMethod::ColumnMinor(cols)));
        }
    }
    let bt = b.transpose();
    let gram = b.mul(&bt);
    let inv = gram
        .inverse()
        .ok_or_else(|| StructError::Eval("L_gΩ_k B Bᵀ is singular".into()))?;
    Ok((c.mul(&bt).mul(&inv), PMethod::Gram))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combos() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(2, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(1, 2).is_empty());
        assert_eq!(combinations(4, 1).len(), 4);
    }
}
