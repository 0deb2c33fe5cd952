use std::collections::BTreeMap;

use super::expr::{Expr, Func, Node};
use super::num::Num;

const FLOAT_EPS: f64 = 1e-12;

/// Numerator of `e` after multiplying every term by the common denominator
/// (negative-power factors of the terms).
pub fn clear_denominators(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..8 {
        let mut den: BTreeMap<Expr, i64> = BTreeMap::new();
        for t in cur.terms() {
            for (b, k) in factors(&t) {
                if k < 0 {
                    let slot = den.entry(b).or_insert(0);
                    *slot = (*slot).max(-k);
                }
            }
        }
        if den.is_empty() {
            break;
        }
        let extra: Vec<(Expr, i64)> = den.into_iter().collect();
        cur = Expr::add_all(cur.terms().iter().map(|t| t.mul_by_powers(&extra)));
    }
    cur
}

fn factors(t: &Expr) -> Vec<(Expr, i64)> {
    let one = |e: &Expr| match e.node() {
        Node::Pow(b, k) => (b.clone(), *k),
        _ => (e.clone(), 1),
    };
    match t.node() {
        Node::Mul(fs) => fs
            .iter()
            .filter(|f| f.as_num().is_none())
            .map(one)
            .collect(),
        Node::Num(_) => Vec::new(),
        _ => vec![one(t)],
    }
}

/// Rewrites `cos(u)^k`, k ≥ 2, through `cos² = 1 - sin²`.
pub fn trig_reduce(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Var(_) => e.clone(),
        Node::Pow(b, k) if *k >= 2 => {
            let b2 = trig_reduce(b);
            if let Node::Func(Func::Cos, u) = b2.node() {
                let s2 = Expr::one() - u.sin().pow(2);
                return Expr::mul_all([b2.pow(k % 2), s2.pow(k / 2)]);
            }
            b2.pow(*k)
        }
        _ => e.map_children(trig_reduce),
    }
}

fn negligible(e: &Expr) -> bool {
    e.terms().iter().all(|t| match t.split_coeff().0 {
        Num::Float(c) => c.abs() <= FLOAT_EPS,
        n => n.is_zero(),
    })
}

/// Symbolic zero test: canonical zero, or zero after clearing denominators
/// and reducing `cos²`. Float coefficients within 1e-12 count as zero.
pub fn is_zero(e: &Expr) -> bool {
    if e.is_zero_literal() {
        return true;
    }
    let n = clear_denominators(e);
    if negligible(&n) {
        return true;
    }
    let t = clear_denominators(&trig_reduce(&n));
    negligible(&t)
}

/// `is_zero(a - b)`.
pub fn sym_eq(a: &Expr, b: &Expr) -> bool {
    a == b || is_zero(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse;

    #[test]
    fn rational_cancellation() {
        let e = parse("(x1^2 - 1)/(x1 - 1) - x1 - 1").unwrap();
        assert!(is_zero(&e));
        let e = parse("1/x1 + 1/x2 - (x1 + x2)/(x1*x2)").unwrap();
        assert!(is_zero(&e));
        assert!(!is_zero(&parse("1/x1 - 1/x2").unwrap()));
    }

    #[test]
    fn pythagoras() {
        let e = parse("sin(x1)^2 + cos(x1)^2 - 1").unwrap();
        assert!(is_zero(&e));
    }

    #[test]
    fn float_noise() {
        let e = parse("1e-15*x1").unwrap();
        assert!(is_zero(&e));
    }
}
