use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::numerics;
use crate::symcore::{jacobian, Expr, Program, Sym};
use crate::sysmodel::Domain;

const ITERS: usize = 50;
const ACCEPT: f64 = 1e-10;

/// Damped Gauss–Newton projection of each start onto `{c(x) = 0}`. Keeps the
/// converged points that land in `accept`.
pub fn project_to(
    constraints: &[Expr],
    vars: &[Sym],
    starts: &[Vec<f64>],
    accept: &Domain,
) -> Vec<Vec<f64>> {
    let live: Vec<Expr> = constraints
        .iter()
        .filter(|c| !c.is_zero_literal())
        .cloned()
        .collect();
    if live.is_empty() {
        return starts
            .iter()
            .filter(|x| accept.contains(x))
            .cloned()
            .collect();
    }
    let (Ok(res), Ok(jac)) = (
        Program::compile(&live, vars),
        jacobian(&live, vars).compile(vars),
    ) else {
        return Vec::new();
    };
    let (r, n) = (live.len(), vars.len());
    let norm = |x: &[f64]| res.eval(x).iter().map(|v| v * v).sum::<f64>().sqrt();
    starts
        .par_iter()
        .filter_map(|x0| {
            let mut x = x0.clone();
            let mut cur = norm(&x);
            for _ in 0..ITERS {
                if !cur.is_finite() || cur <= ACCEPT {
                    break;
                }
                let j = DMatrix::from_row_slice(r, n, &jac.eval(&x));
                let rv = DVector::from_vec(res.eval(&x));
                let step = numerics::lstsq(
                    &j,
                    &DMatrix::from_column_slice(r, 1, (-rv).as_slice()),
                    1e-12,
                )?;
                let mut t = 1.0;
                loop {
                    let trial: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v + t * step[(i, 0)])
                        .collect();
                    let nt = norm(&trial);
                    if nt < cur {
                        x = trial;
                        cur = nt;
                        break;
                    }
                    t *= 0.5;
                    if t < 1e-8 {
                        return None;
                    }
                }
            }
            (cur <= ACCEPT && accept.contains(&x) && x.iter().all(|v| v.is_finite())).then_some(x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse, syms};

    #[test]
    fn lands_on_parabola() {
        let v = syms("x", 2);
        let c = vec![parse("x2 - x1^2").unwrap()];
        let pts = project_to(
            &c,
            &v,
            &[vec![0.05, -0.07], vec![0.02, 0.09]],
            &Domain::unit(2).scaled(0.5),
        );
        assert_eq!(pts.len(), 2);
        for p in pts {
            assert!((p[1] - p[0] * p[0]).abs() <= 1e-10);
        }
    }
}
