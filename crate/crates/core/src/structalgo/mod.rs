//! Infinite-zero and zero-output structure algorithms, normal-form assembly,
//! zero dynamics and the structural assumption checks.

mod algorithm;
mod assumptions;
mod invariance;
mod normal_form;
mod project;
mod report;
mod select;
mod zero_dyn;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::symcore::{Expr, SymMatrix};
use crate::sysmodel::{SamplePlan, SysError};

pub use algorithm::{
    classify_invertibility, infinite_zero_algorithm, run_structure, zero_output_algorithm,
};
pub use assumptions::{check_assumption_b, check_assumption_c, check_assumption_d};
pub use invariance::{
    apply_transform, invariance_harness, random_transform, InvarianceReport, Transform,
    TransformKind,
};
pub use normal_form::{build_normal_form, invert_chart, Chain, NormalForm, NormalFormOptions};
pub use project::project_to;
pub use report::{render_text, to_json};
pub use select::{select_rs, solve_p, PMethod};
pub use zero_dyn::{abc_split, zero_dynamics, AbcSplit, ZeroDynamics};

/// Node count above which an intermediate expression aborts the run.
pub const EXPR_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructError {
    #[error("not regular at step {step}: {reason}")]
    NotRegular { step: usize, reason: String },
    #[error("not regular at the origin at step {step}: rank at x=0 differs from nearby points of M_{step}")]
    NotRegularAtOrigin { step: usize },
    #[error("simplification budget exceeded at step {step}")]
    Budget { step: usize },
    #[error("assumption B fails: dΦ̄_d loses rank at sample {0}")]
    AssumptionB(usize),
    #[error("chart completion failed: {0}")]
    Completion(String),
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    Sys(#[from] SysError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Invertibility {
    LeftInvertible,
    RightInvertible,
    Invertible,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    InfiniteZero,
    ZeroOutput,
}

#[derive(Debug, Clone)]
pub struct StructConfig {
    pub plan: SamplePlan,
    pub tol: f64,
    /// Stop once `max(m,p) − ρ_k − 1 + k + Σ j(ρ_j − ρ_{j−1}) ≥ n` when `dh`
    /// and `g` have full rank.
    pub early_exit: bool,
}

impl Default for StructConfig {
    fn default() -> Self {
        StructConfig {
            plan: SamplePlan::default(),
            tol: 1e-8,
            early_exit: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub k: usize,
    pub rho: usize,
    /// `L_f Θ_{k−1}`.
    pub lf_theta: Vec<Expr>,
    /// `L_g Θ_{k−1}`.
    pub lg_theta: SymMatrix,
    /// Rows of `Θ_{k−1}` kept by `R_k`.
    pub r_rows: Vec<usize>,
    /// Rows of `Θ_{k−1}` kept by `S_k`.
    pub s_rows: Vec<usize>,
    pub omega: Vec<Expr>,
    /// `(len S_k) × ρ_k`; column block `l` is `P_{k,l}`.
    pub p: SymMatrix,
    pub p_method: PMethod,
    /// Zero-output residual `L_gS_kΘ_{k−1} − P_k L_gΩ_k`.
    pub w: Option<SymMatrix>,
    pub theta: Vec<Expr>,
    /// Points at which the rank hypothesis was checked.
    pub points: usize,
}

impl StepRecord {
    /// `R_k` as a 0/1 matrix over the rows of `Θ_{k−1}`.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        selection(&self.r_rows, self.r_rows.len() + self.s_rows.len())
    }

    pub fn s_matrix(&self) -> DMatrix<f64> {
        selection(&self.s_rows, self.r_rows.len() + self.s_rows.len())
    }
}

fn selection(rows: &[usize], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), n, |i, j| if rows[i] == j { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone)]
pub struct StructureOutcome {
    pub variant: Variant,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// `Θ_0 = h`.
    pub h: Vec<Expr>,
    pub steps: Vec<StepRecord>,
    /// `ρ_1..ρ_{k*}`.
    pub rho: Vec<usize>,
    pub q: Vec<usize>,
    pub k_star: usize,
    pub m_d: usize,
    pub n_d: usize,
    pub invertibility: Invertibility,
    /// `L_f Ω_{k*}`.
    pub a: Vec<Expr>,
    /// `L_g Ω_{k*}`.
    pub b: SymMatrix,
    pub warnings: Vec<String>,
}

impl StructureOutcome {
    /// `Θ_k` for `k = 0..=k*`.
    pub fn theta(&self, k: usize) -> &[Expr] {
        if k == 0 {
            &self.h
        } else {
            &self.steps[k - 1].theta
        }
    }

    pub fn omega(&self) -> &[Expr] {
        self.steps.last().map_or(&[], |s| &s.omega)
    }

    /// `P_{k,l}`: the columns of `P_k` belonging to rows added at step `l`.
    pub fn p_block(&self, k: usize, l: usize) -> SymMatrix {
        let lo = if l <= 1 { 0 } else { self.rho[l - 2] };
        let hi = self.rho[l - 1];
        self.steps[k - 1]
            .p
            .select_cols(&(lo..hi).collect::<Vec<_>>())
    }
}
