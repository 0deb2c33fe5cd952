use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Expr, Sym};
use super::zero::is_zero;

/// Outcome of comparing two expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equivalence {
    /// Values agree within 1e-9 (relative to magnitude) at every sample.
    pub numeric: bool,
    /// Canonical forms match or the difference reduces to zero.
    pub symbolic: bool,
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        self.numeric && self.symbolic
    }
}

pub const EQUIV_POINTS: usize = 32;
pub const EQUIV_TOL: f64 = 1e-9;

/// Compares `a` and `b` at 32 seeded points in `[-1, 1]` per variable and
/// symbolically. Points where either side is non-finite are skipped.
pub fn compare(a: &Expr, b: &Expr, seed: u64) -> Equivalence {
    let mut vars: Vec<Sym> = a.free_vars().into_iter().chain(b.free_vars()).collect();
    vars.sort();
    vars.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut numeric = true;
    let mut x = vec![0.0; vars.len()];
    for _ in 0..EQUIV_POINTS {
        x.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let (Ok(va), Ok(vb)) = (a.eval(&vars, &x), b.eval(&vars, &x)) else {
            numeric = false;
            break;
        };
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        if (va - vb).abs() > EQUIV_TOL * (1.0 + va.abs().max(vb.abs())) {
            numeric = false;
            break;
        }
    }
    let symbolic = a == b || is_zero(&(a - b));
    Equivalence { numeric, symbolic }
}

pub fn equivalent(a: &Expr, b: &Expr) -> bool {
    compare(a, b, 0x5eed).holds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    #[test]
    fn agrees_and_disagrees() {
        let a = parse("(x1 + x2)^2").unwrap();
        let b = parse("x1^2 + 2*x1*x2 + x2^2").unwrap();
        assert!(equivalent(&a, &b));
        let c = parse("x1^2 + x2^2").unwrap();
        let r = compare(&a, &c, 1);
        assert!(!r.numeric && !r.symbolic);
    }
}
