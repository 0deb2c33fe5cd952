//! Affine systems `ẋ = f(x) + g(x)u, y = h(x)`, their text format and the
//! sampling/rank oracles used to certify constant-rank hypotheses.

mod format;
pub(crate) mod sample;

use std::collections::HashMap;

use crate::symcore::{is_zero, Expr, LieError, ParseError, Sym, SymMatrix, VectorField};

pub use format::{
    parse_bracket_list, parse_entry, parse_system, render_system, Entry, Section, SectionReader,
};
pub use sample::{numeric_rank, sample_domain, RankReport, SamplePlan};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SysError {
    #[error("line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("f(0)≠0 at component {0}")]
    FNonzero(usize),
    #[error("h(0)≠0 at component {0}")]
    HNonzero(usize),
    #[error("origin is outside the domain on axis {0}")]
    OriginOutside(usize),
    #[error("degenerate domain on axis {0}")]
    DegenerateBox(usize),
    #[error("variable `{0}` is not a state")]
    UnknownVariable(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sample count must be positive")]
    NoSamples,
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("sample {0} lies outside the domain")]
    PointOutside(usize),
    #[error("could not find finite samples in the domain")]
    SamplingFailed,
    #[error("{0}")]
    Io(String),
}

impl SysError {
    pub(crate) fn parse_at(line: usize, col: usize, e: &ParseError) -> SysError {
        SysError::Parse {
            line,
            col: col + e.pos(),
            msg: e.to_string(),
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn unit(n: usize) -> Domain {
        Domain {
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// Shrinks every axis by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Domain {
        Domain {
            lo: self.lo.iter().map(|v| v * factor).collect(),
            hi: self.hi.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub states: Vec<Sym>,
    pub f: Vec<Expr>,
    /// n × m
    pub g: SymMatrix,
    pub h: Vec<Expr>,
    pub domain: Domain,
}

impl AffineSystem {
    /// Validates shapes, free variables, `f(0) = 0`, `h(0) = 0` and the domain.
    pub fn new(
        states: Vec<Sym>,
        f: Vec<Expr>,
        g: SymMatrix,
        h: Vec<Expr>,
        domain: Domain,
    ) -> Result<Self, SysError> {
        let n = states.len();
        if f.len() != n {
            return Err(SysError::Shape(format!(
                "f has {} components, expected {n}",
                f.len()
            )));
        }
        if g.nrows() != n {
            return Err(SysError::Shape(format!(
                "g has {} rows, expected {n}",
                g.nrows()
            )));
        }
        if domain.lo.len() != n || domain.hi.len() != n {
            return Err(SysError::Shape(
                "domain dimension differs from state count".into(),
            ));
        }
        for e in f.iter().chain(g.entries()).chain(&h) {
            for v in e.free_vars() {
                if !states.contains(&v) {
                    return Err(SysError::UnknownVariable(v.to_string()));
                }
            }
        }
        let origin: HashMap<Sym, Expr> = states.iter().map(|s| (s.clone(), Expr::zero())).collect();
        if let Some(i) = f.iter().position(|e| !is_zero(&e.subs(&origin))) {
            return Err(SysError::FNonzero(i + 1));
        }
        if let Some(i) = h.iter().position(|e| !is_zero(&e.subs(&origin))) {
            return Err(SysError::HNonzero(i + 1));
        }
        for i in 0..n {
            if !(domain.lo[i] < domain.hi[i]) {
                return Err(SysError::DegenerateBox(i + 1));
            }
            if !(domain.lo[i] <= 0.0 && 0.0 <= domain.hi[i]) {
                return Err(SysError::OriginOutside(i + 1));
            }
        }
        Ok(AffineSystem {
            states,
            f,
            g,
            h,
            domain,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SysError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SysError::Io(format!("{}: {e}", path.as_ref().display())))?;
        parse_system(&text)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn m(&self) -> usize {
        self.g.ncols()
    }

    pub fn p(&self) -> usize {
        self.h.len()
    }

    pub fn f_field(&self) -> VectorField {
        VectorField {
            comps: self.f.clone(),
            states: self.states.clone(),
        }
    }

    pub fn g_fields(&self) -> Vec<VectorField> {
        (0..self.m())
            .map(|j| VectorField {
                comps: self.g.col(j),
                states: self.states.clone(),
            })
            .collect()
    }

    /// `L_g λ` for a vector function: `len × m`.
    pub fn lg(&self, lambdas: &[Expr]) -> SymMatrix {
        crate::symcore::lie_derivative_matrix(&self.g_fields(), lambdas)
    }

    pub fn lf(&self, lambdas: &[Expr]) -> Vec<Expr> {
        let f = self.f_field();
        lambdas
            .iter()
            .map(|l| crate::symcore::lie_derivative(&f, l))
            .collect()
    }

    /// Same system with `f + g·k` and `g·Γ`, useful for feedback transforms.
    pub fn with_parts(&self, f: Vec<Expr>, g: SymMatrix, h: Vec<Expr>) -> Result<Self, SysError> {
        AffineSystem::new(self.states.clone(), f, g, h, self.domain.clone())
    }
}

impl From<LieError> for SysError {
    fn from(e: LieError) -> Self {
        SysError::Shape(e.to_string())
    }
}
