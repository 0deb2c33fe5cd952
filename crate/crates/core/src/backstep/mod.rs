//! Backstepping synthesis on chain normal forms: single integrator steps,
//! backstepping orders (κ), chain-by-chain / level-by-level / mixed folds,
//! low-gain semi-global designs and dissipative (L2-gain) designs.

mod fold;
mod lowgain;
mod model;
mod order;
mod stabilizer;
mod step;

use std::fmt;

use serde::Serialize;

use crate::symcore::{Expr, Sym};
use crate::sysmodel::SysError;

pub use fold::{
    da_synthesize, semi_global_synthesize, synthesize, Budget, DecreaseCheck, DesignOptions,
};
pub use lowgain::{low_gain, LowGainDesign};
pub use model::{ChainSystem, Var};
pub use order::{validate_order, Order, Violation};
pub use stabilizer::{Stabilizer, StabilizerCheck};
pub use step::{dissipative_backstep, integrator_backstep, Step};

/// Symbol used for the attenuation level in generated laws.
pub const GAMMA: &str = "gamma";
/// Symbol used for the low-gain / budget parameter in generated laws.
pub const EPS: &str = "eps";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackstepError {
    #[error("malformed order: {0}")]
    MalformedOrder(String),
    #[error("order violation: {0}")]
    OrderViolation(Violation),
    #[error("dynamics are not affine in `{0}`")]
    NotAffine(Sym),
    #[error("input `{input}` is not yet determined when stepping `{var}`")]
    Undetermined { var: Sym, input: String },
    #[error("simplification budget exceeded at `{0}`")]
    ExprBudget(Sym),
    #[error("supply budget exhausted: {steps} disturbed steps for {parts} parts")]
    BudgetExhausted { steps: usize, parts: usize },
    #[error("no disturbance bound for `{0}`")]
    MissingBound(Sym),
    #[error("low-gain parameter must be positive, got {0}")]
    NonpositiveEps(f64),
    #[error("polynomial of chain {0} is not Hurwitz")]
    NotHurwitz(usize),
    #[error("slow lengths violate ℓ1 ≤ q1+1, ℓi ≤ q1: {0}")]
    Levels(String),
    #[error("stabilizer rejected: {0}")]
    Stabilizer(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Sys(#[from] SysError),
}

/// One integrator step of a design, in κ order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRecord {
    /// Stepped variable `ξ_{i,j}`.
    pub var: String,
    pub chain: usize,
    pub level: usize,
    /// Virtual target `φ_{i,j}` the variable is steered to.
    pub target: String,
    pub gain: String,
    /// Term added to the storage function.
    pub w_term: String,
    /// `φ_{i,j+1}` or `v_i` produced by the step.
    pub law: String,
    /// `γ_s²` of the step; absent for undisturbed or low-gain steps.
    pub budget: Option<String>,
    /// Largest sampled value of the step's dissipation (or decrease) residual.
    pub margin: Option<f64>,
    pub low_gain: bool,
}

/// Synthesized feedback `v(η, ξ)` with its storage function.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub states: Vec<Sym>,
    pub v: Vec<Expr>,
    pub w: Expr,
    pub ledger: Vec<LedgerRecord>,
    pub check: DecreaseCheck,
    /// Base condition of the stabilizer (or of the low-gain storage).
    pub base: StabilizerCheck,
    /// Supply weight on `|w|²` consumed by a dissipative design, at most `(γ+ε)²` or `γ²`.
    pub supply: Option<Expr>,
    pub warnings: Vec<String>,
}

impl ControlLaw {
    /// Law for input `i` (1-based).
    pub fn input(&self, i: usize) -> &Expr {
        &self.v[i - 1]
    }
}

impl fmt::Display for ControlLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.v.iter().enumerate() {
            writeln!(f, "v{} = {}", i + 1, v)?;
        }
        writeln!(f, "W = {}", self.w)?;
        for r in &self.ledger {
            write!(
                f,
                "step {}: target {}, gain {}, law {}",
                r.var, r.target, r.gain, r.law
            )?;
            if let Some(b) = &r.budget {
                write!(f, ", budget {b}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
