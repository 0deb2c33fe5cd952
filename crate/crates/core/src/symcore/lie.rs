use nalgebra::DMatrix;

use super::diff::diff;
use super::expr::{EvalError, Expr, Sym};
use super::matrix::SymMatrix;
use crate::numerics;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("vector field has {comps} components but {states} state names")]
    Arity { comps: usize, states: usize },
    #[error("variable `{0}` is not a state")]
    UnknownVariable(String),
    #[error("vector fields live on different state lists")]
    StateMismatch,
    #[error("empty sample list")]
    NoSamples,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Components over an ordered list of state names.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: Vec<Expr>,
    pub states: Vec<Sym>,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>, states: Vec<Sym>) -> Result<VectorField, LieError> {
        if comps.len() != states.len() {
            return Err(LieError::Arity {
                comps: comps.len(),
                states: states.len(),
            });
        }
        for c in &comps {
            for v in c.free_vars() {
                if !states.contains(&v) {
                    return Err(LieError::UnknownVariable(v.to_string()));
                }
            }
        }
        Ok(VectorField { comps, states })
    }

    pub fn zero(states: Vec<Sym>) -> VectorField {
        VectorField {
            comps: vec![Expr::zero(); states.len()],
            states,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(super::zero::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.comps.iter().map(|c| c.eval(&self.states, x)).collect()
    }
}

pub fn gradient(e: &Expr, vars: &[Sym]) -> Vec<Expr> {
    vars.iter().map(|v| diff(e, v)).collect()
}

pub fn jacobian(v: &[Expr], vars: &[Sym]) -> SymMatrix {
    SymMatrix::from_fn(v.len(), vars.len(), |i, j| diff(&v[i], &vars[j]))
}

/// `Σ ∂λ/∂x_i f_i`.
pub fn lie_derivative(f: &VectorField, lambda: &Expr) -> Expr {
    Expr::add_all(
        f.states
            .iter()
            .zip(&f.comps)
            .filter(|(_, fi)| !fi.is_zero_literal())
            .map(|(x, fi)| diff(lambda, x) * fi),
    )
}

/// Column `j` of the result is `L_{g_j}` of the vector function `lambdas`.
pub fn lie_derivative_matrix(gs: &[VectorField], lambdas: &[Expr]) -> SymMatrix {
    SymMatrix::from_fn(lambdas.len(), gs.len(), |i, j| {
        lie_derivative(&gs[j], &lambdas[i])
    })
}

/// `(∂g/∂x) f − (∂f/∂x) g`.
pub fn lie_bracket(f: &VectorField, g: &VectorField) -> Result<VectorField, LieError> {
    if f.states != g.states {
        return Err(LieError::StateMismatch);
    }
    let comps = (0..f.comps.len())
        .map(|i| lie_derivative(f, &g.comps[i]) - lie_derivative(g, &f.comps[i]))
        .collect();
    Ok(VectorField {
        comps,
        states: f.states.clone(),
    })
}

pub fn ad_power(f: &VectorField, g: &VectorField, k: usize) -> Result<VectorField, LieError> {
    let mut cur = g.clone();
    for _ in 0..k {
        cur = lie_bracket(f, &cur)?;
    }
    Ok(cur)
}

/// Numeric involutivity: at every point, adding all pairwise brackets does
/// not raise the rank of the span.
pub fn involutive(fields: &[VectorField], points: &[Vec<f64>], tol: f64) -> Result<bool, LieError> {
    if points.is_empty() {
        return Err(LieError::NoSamples);
    }
    let Some(first) = fields.first() else {
        return Ok(true);
    };
    let n = first.states.len();
    let mut all = fields.to_vec();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            all.push(lie_bracket(&fields[i], &fields[j])?);
        }
    }
    for x in points {
        let span = |fs: &[VectorField]| -> Result<DMatrix<f64>, EvalError> {
            let mut m = DMatrix::zeros(n, fs.len());
            for (j, f) in fs.iter().enumerate() {
                for (i, v) in f.eval(x)?.into_iter().enumerate() {
                    m[(i, j)] = v;
                }
            }
            Ok(m)
        };
        if numerics::rank(&span(fields)?, tol) != numerics::rank(&span(&all)?, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    fn states(n: usize) -> Vec<Sym> {
        (1..=n).map(|i| Sym::from(format!("x{i}"))).collect()
    }

    fn vf(s: &[&str]) -> VectorField {
        VectorField::new(
            s.iter().map(|c| parse(c).unwrap()).collect(),
            states(s.len()),
        )
        .unwrap()
    }

    #[test]
    fn ad_squared() {
        let f = vf(&["x2", "0"]);
        let g = vf(&["0", "1"]);
        assert_eq!(ad_power(&f, &g, 0).unwrap(), g);
        assert_eq!(
            ad_power(&f, &g, 1).unwrap().comps,
            vec![Expr::int(-1), Expr::zero()]
        );
        // second bracket of a constant field vanishes
        assert!(ad_power(&f, &g, 2).unwrap().is_zero());
    }

    #[test]
    fn linear_ad() {
        // f = A x, g = b: ad_f b = -A b
        let f = vf(&["x2", "-x1 - x2"]);
        let g = vf(&["1", "0"]);
        assert_eq!(
            lie_bracket(&f, &g).unwrap().comps,
            vec![Expr::zero(), Expr::one()]
        );
    }

    #[test]
    fn lie_derivative_of_constant() {
        let f = vf(&["x2", "x1"]);
        assert!(lie_derivative(&f, &Expr::int(5)).is_zero_literal());
    }

    #[test]
    fn arity_checked() {
        assert!(VectorField::new(vec![Expr::zero()], states(2)).is_err());
        assert!(VectorField::new(vec![parse("x3").unwrap()], states(1)).is_err());
    }
}
