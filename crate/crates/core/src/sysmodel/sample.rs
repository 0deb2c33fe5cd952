use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::numerics;
use crate::symcore::{Program, Sym, SymMatrix};

use super::{AffineSystem, Domain, SysError};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
    pub points: Option<Vec<Vec<f64>>>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            count: 200,
            seed: 42,
            points: None,
        }
    }
}

impl SamplePlan {
    pub fn new(count: usize, seed: u64) -> SamplePlan {
        SamplePlan {
            count,
            seed,
            points: None,
        }
    }
}

/// Uniform points strictly inside the box at which `f` and `g` are finite.
pub fn sample_domain(plan: &SamplePlan, sys: &AffineSystem) -> Result<Vec<Vec<f64>>, SysError> {
    sample_box(plan, &sys.domain, sys)
}

pub(crate) fn sample_box(
    plan: &SamplePlan,
    dom: &Domain,
    sys: &AffineSystem,
) -> Result<Vec<Vec<f64>>, SysError> {
    let n = sys.n();
    for i in 0..n {
        if !(dom.lo[i] < dom.hi[i]) {
            return Err(SysError::DegenerateBox(i + 1));
        }
    }
    let mut exprs = sys.f.clone();
    exprs.extend(sys.g.entries().iter().cloned());
    let prog = Program::compile(&exprs, &sys.states).map_err(|e| SysError::Shape(e.to_string()))?;
    let finite = |x: &[f64]| prog.eval(x).iter().all(|v| v.is_finite());
    if let Some(pts) = &plan.points {
        if pts.is_empty() {
            return Err(SysError::NoSamples);
        }
        for (k, p) in pts.iter().enumerate() {
            if p.len() != n || !dom.contains(p) {
                return Err(SysError::PointOutside(k));
            }
        }
        return Ok(pts.clone());
    }
    if plan.count == 0 {
        return Err(SysError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(plan.count);
    let mut tries = 0usize;
    while out.len() < plan.count {
        tries += 1;
        if tries > 100 * plan.count + 1000 {
            return Err(SysError::SamplingFailed);
        }
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t: f64 = rng.gen_range(f64::EPSILON..1.0);
                dom.lo[i] + (dom.hi[i] - dom.lo[i]) * t
            })
            .collect();
        if finite(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Rank of a matrix function at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub ranks: Vec<usize>,
    /// Rank at the first point, which callers use as the base point.
    pub rank: usize,
    pub constant: bool,
    /// Indices whose rank differs from `rank`.
    pub dissenting: Vec<usize>,
}

pub fn numeric_rank(
    m: &SymMatrix,
    vars: &[Sym],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<RankReport, SysError> {
    if points.is_empty() {
        return Err(SysError::NoSamples);
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        let ranks = vec![0; points.len()];
        return Ok(RankReport {
            ranks,
            rank: 0,
            constant: true,
            dissenting: Vec::new(),
        });
    }
    let prog = m
        .compile(vars)
        .map_err(|e| SysError::Shape(e.to_string()))?;
    let (r, c) = (m.nrows(), m.ncols());
    let ranks: Vec<Result<usize, SysError>> = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let vals = prog.eval(x);
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(SysError::NonFinite(k));
            }
            Ok(numerics::rank(
                &nalgebra::DMatrix::from_row_slice(r, c, &vals),
                tol,
            ))
        })
        .collect();
    let ranks: Vec<usize> = ranks.into_iter().collect::<Result<_, _>>()?;
    let rank = ranks[0];
    let dissenting: Vec<usize> = ranks
        .iter()
        .enumerate()
        .filter(|(_, r)| **r != rank)
        .map(|(i, _)| i)
        .collect();
    Ok(RankReport {
        constant: dissenting.is_empty(),
        ranks,
        rank,
        dissenting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{parse, syms};

    fn remark() -> AffineSystem {
        super::super::parse_system(
            "[states]\nx1, x2\n[f]\n[0, 0]\n[g]\n[1, 0]\n[0, 1]\n[h]\n[x1, x1*x2]\n",
        )
        .unwrap()
    }

    #[test]
    fn deterministic_samples() {
        let sys = remark();
        let plan = SamplePlan::new(4, 42);
        let a = sample_domain(&plan, &sys).unwrap();
        assert_eq!(a, sample_domain(&plan, &sys).unwrap());
        assert!(a.iter().all(|p| sys.domain.contains(p)));
        assert_eq!(
            sample_domain(&SamplePlan::new(0, 42), &sys),
            Err(SysError::NoSamples)
        );
    }

    #[test]
    fn ranks() {
        let sys = remark();
        let vars = syms("x", 2);
        let lgh = sys.lg(&sys.h);
        let mut pts = vec![vec![0.0, 0.3]];
        pts.extend(sample_domain(&SamplePlan::new(10, 1), &sys).unwrap());
        let rep = numeric_rank(&lgh, &vars, &pts, 1e-8).unwrap();
        assert_eq!(rep.rank, 1);
        assert!(!rep.constant);
        let id = SymMatrix::identity(2);
        assert_eq!(numeric_rank(&id, &vars, &pts, 1e-8).unwrap().rank, 2);
        let z = SymMatrix::zeros(2, 2);
        assert!(numeric_rank(&z, &vars, &pts, 1e-8).unwrap().constant);
        let bad = SymMatrix::column(vec![parse("1/x1").unwrap()]);
        assert_eq!(
            numeric_rank(&bad, &vars, &[vec![0.0, 0.0]], 1e-8),
            Err(SysError::NonFinite(0))
        );
    }
}
