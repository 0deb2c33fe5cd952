use nalgebra::DMatrix;

use crate::symcore::{Expr, Num};

use super::model::xi_name;
use super::{BackstepError, EPS};

/// Low-gain laws `ξ*_i = −Σ_j eps^{ℓ_i−j} c_{i,j−1} ξ_{i,j}` for the slow
/// subsystems, with `s^{ℓ_i−1} + Σ c_{i,k} s^k` Hurwitz. `eps` stays symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct LowGainDesign {
    pub levels: Vec<usize>,
    pub eps: f64,
    /// `c_{i,0..ℓ_i−2}`, lowest power first.
    pub coeffs: Vec<Vec<Num>>,
    /// `None` for chains with `ℓ_i = 1`, whose virtual output is 0.
    pub laws: Vec<Option<Expr>>,
}

/// Builds the low-gain laws from the roots of each slow polynomial (all `−1`
/// when `poles` is `None`).
pub fn low_gain(
    levels: &[usize],
    eps: f64,
    poles: Option<&[Vec<f64>]>,
) -> Result<LowGainDesign, BackstepError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(BackstepError::NonpositiveEps(eps));
    }
    if let Some(p) = poles {
        if p.len() != levels.len() {
            return Err(BackstepError::Shape(format!(
                "{} pole sets for {} chains",
                p.len(),
                levels.len()
            )));
        }
    }
    let mut coeffs = Vec::with_capacity(levels.len());
    let mut laws = Vec::with_capacity(levels.len());
    for (i, &l) in levels.iter().enumerate() {
        if l <= 1 {
            coeffs.push(Vec::new());
            laws.push(None);
            continue;
        }
        let deg = l - 1;
        let roots = match poles {
            Some(p) if p[i].len() != deg => {
                return Err(BackstepError::Shape(format!(
                    "chain {} needs {deg} poles, got {}",
                    i + 1,
                    p[i].len()
                )))
            }
            Some(p) => p[i].clone(),
            None => vec![-1.0; deg],
        };
        let c = monic(&roots);
        if !hurwitz(&c) {
            return Err(BackstepError::NotHurwitz(i + 1));
        }
        let c: Vec<Num> = c.iter().map(|&v| exact(v)).collect();
        let eps_e = Expr::var(EPS);
        let law = -Expr::add_all((1..l).map(|j| {
            eps_e.pow((l - j) as i64) * Expr::num(c[j - 1]) * Expr::sym(&xi_name(i + 1, j))
        }));
        coeffs.push(c);
        laws.push(Some(law.simplify()));
    }
    Ok(LowGainDesign {
        levels: levels.to_vec(),
        eps,
        coeffs,
        laws,
    })
}

/// Coefficients of `Π (s − r)` below the leading one, lowest power first.
fn monic(roots: &[f64]) -> Vec<f64> {
    let mut p = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= r * a;
        }
        p = next;
    }
    p.pop();
    p
}

fn hurwitz(c: &[f64]) -> bool {
    let d = c.len();
    let comp = DMatrix::from_fn(d, d, |r, k| {
        if r + 1 == k {
            1.0
        } else if r + 1 == d {
            -c[k]
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues().iter().all(|z| z.re < 0.0)
}

fn exact(v: f64) -> Num {
    if (v - v.round()).abs() < 1e-12 && v.abs() < 1e15 {
        Num::int(v.round() as i128)
    } else {
        Num::Float(v)
    }
}
