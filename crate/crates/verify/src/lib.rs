//! Fixture helpers for the acceptance suite.

use std::path::PathBuf;

use nlstruct::symcore::{Expr, Sym};
use proptest::prelude::*;

/// Path of a file under the workspace `models/` directory.
pub fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

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
            inner.clone().prop_map(|e| (Expr::int(2) + e.pow(2)).recip()),
        ]
    })
}
