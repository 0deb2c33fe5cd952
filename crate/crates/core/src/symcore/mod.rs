//! Symbolic expressions, differentiation and the Lie-derivative toolkit.

mod diff;
mod equiv;
mod eval;
mod expr;
mod lie;
mod matrix;
mod num;
mod parse;
mod render;
mod zero;

pub use diff::diff;
pub use equiv::{compare, equivalent, Equivalence, EQUIV_POINTS, EQUIV_TOL};
pub use eval::Program;
pub use expr::{natural_cmp, set_term_budget, term_budget, EvalError, Expr, Func, Node, Sym};
pub use lie::{
    ad_power, gradient, involutive, jacobian, lie_bracket, lie_derivative, lie_derivative_matrix,
    LieError, VectorField,
};
pub use matrix::SymMatrix;
pub use num::{Num, Rational};
pub use parse::{parse, ParseError};
pub use render::render;
pub use zero::{clear_denominators, is_zero, sym_eq, trig_reduce};

/// Simplified form; constructors already canonicalize, so this rebuilds.
pub fn simplify(e: &Expr) -> Expr {
    e.simplify()
}

pub fn free_vars(e: &Expr) -> std::collections::BTreeSet<Sym> {
    e.free_vars()
}

/// Names `prefix1..prefixN` as symbols.
pub fn syms(prefix: &str, n: usize) -> Vec<Sym> {
    (1..=n).map(|i| Sym::from(format!("{prefix}{i}"))).collect()
}
