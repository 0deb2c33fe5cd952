#![allow(dead_code)]

use nlstruct::symcore::{Expr, Sym};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vars3() -> Vec<Sym> {
    ["x1", "x2", "x3"].iter().map(|s| Sym::from(*s)).collect()
}

/// Smooth expressions over x1..x3 without poles on the real line.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1usize..=3).prop_map(|i| Expr::var(&format!("x{i}"))),
        (-5i128..=5, 1i128..=4).prop_map(|(n, d)| Expr::rational(n, d)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add_all),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul_all),
            (inner.clone(), 2i64..=3).prop_map(|(e, k)| e.pow(k)),
            inner.clone().prop_map(|e| e.sin()),
            inner.clone().prop_map(|e| e.cos()),
            inner.clone().prop_map(|e| (e * Expr::rational(1, 4)).exp()),
            inner
                .clone()
                .prop_map(|e| (Expr::int(2) + e.pow(2)).recip()),
        ]
    })
}

/// Adds sqrt, abs and genuine denominators for structural properties.
pub fn any_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1usize..=3).prop_map(|i| Expr::var(&format!("x{i}"))),
        (-5i128..=5, 1i128..=4).prop_map(|(n, d)| Expr::rational(n, d)),
        (-4.0f64..4.0).prop_map(|v| Expr::float((v * 8.0).round() / 8.0)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add_all),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul_all),
            (inner.clone(), -2i64..=3).prop_map(|(e, k)| e.pow(k)),
            inner.clone().prop_map(|e| e.sin()),
            inner.clone().prop_map(|e| e.cos()),
            inner.clone().prop_map(|e| e.exp()),
            inner.clone().prop_map(|e| e.sqrt()),
            inner.clone().prop_map(|e| e.abs()),
        ]
    })
}

/// Polynomial vector field on x1..x3 with small integer coefficients.
pub fn random_poly_field(rng: &mut ChaCha8Rng) -> Vec<Expr> {
    (0..3)
        .map(|_| {
            let mut terms = Vec::new();
            for _ in 0..3 {
                let c = rng.gen_range(-3i128..=3);
                let mut t = Expr::int(c);
                for v in 1..=3 {
                    let k = rng.gen_range(0i64..=2);
                    t = t * Expr::var(&format!("x{v}")).pow(k);
                }
                terms.push(t);
            }
            Expr::add_all(terms)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Central difference derivative oracle.
pub fn central_diff(e: &Expr, vars: &[Sym], x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (e.eval(vars, &xp).unwrap() - e.eval(vars, &xm).unwrap()) / (2.0 * h)
}
