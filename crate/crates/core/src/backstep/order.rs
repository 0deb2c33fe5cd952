use std::fmt;

use crate::symcore::{is_zero, Expr};

use super::model::{v_name, xi_name};
use super::{BackstepError, ChainSystem, Var};

/// Backstepping order κ: `(chain, level)` pairs, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order(pub Vec<(usize, usize)>);

impl Order {
    /// Parses `xi1_1, xi3_1, ...`; brackets optional, `1_1` also accepted.
    pub fn parse(text: &str) -> Result<Order, BackstepError> {
        let t = text.trim().trim_start_matches('[').trim_end_matches(']');
        let mut out = Vec::new();
        for tok in t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            let body = tok.strip_prefix("xi").unwrap_or(tok);
            let pair = body
                .split_once('_')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            match pair {
                Some(p) => out.push(p),
                None => {
                    return Err(BackstepError::MalformedOrder(format!(
                        "cannot read `{tok}`"
                    )))
                }
            }
        }
        Ok(Order(out))
    }

    pub fn chain_by_chain(q: &[usize]) -> Order {
        Order(
            q.iter()
                .enumerate()
                .flat_map(|(i, &qi)| (1..=qi).map(move |j| (i + 1, j)))
                .collect(),
        )
    }

    pub fn level_by_level(q: &[usize]) -> Order {
        let top = q.iter().copied().max().unwrap_or(0);
        Order(
            (1..=top)
                .flat_map(|j| {
                    q.iter()
                        .enumerate()
                        .filter(move |(_, &qi)| qi >= j)
                        .map(move |(i, _)| (i + 1, j))
                })
                .collect(),
        )
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.0.iter().position(|&p| p == (i, j))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .0
            .iter()
            .map(|&(i, j)| xi_name(i, j).to_string())
            .collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// A violated ordering condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// 2(a): `ξ_{i,j}` must come before `ξ_{i,j+1}`.
    Monotone { chain: usize, level: usize },
    /// 2(b): `δ_{i,j,l} ≠ 0` but chain `l` is not finished before `ξ_{i,j}`.
    Coupling {
        i: usize,
        j: usize,
        l: usize,
        delta: String,
    },
    /// 2(c): `δ_{i,j,l}` depends on a variable stepped after `ξ_{i,j}`.
    Dependency {
        i: usize,
        j: usize,
        l: usize,
        delta: String,
        var: String,
    },
    /// 2(c) for the disturbance coefficient `p_{i,j}`.
    Disturbance {
        i: usize,
        j: usize,
        p: String,
        var: String,
    },
    /// 2(c) for any remaining drift in `ξ̇_{i,j}`.
    Drift {
        i: usize,
        j: usize,
        drift: String,
        var: String,
    },
}

impl Violation {
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::Monotone { .. } => "2(a)",
            Violation::Coupling { .. } => "2(b)",
            _ => "2(c)",
        }
    }

    fn at(&self) -> (usize, usize) {
        match *self {
            Violation::Monotone { chain, level } => (chain, level),
            Violation::Coupling { i, j, .. }
            | Violation::Dependency { i, j, .. }
            | Violation::Disturbance { i, j, .. }
            | Violation::Drift { i, j, .. } => (i, j),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.condition();
        match self {
            Violation::Monotone { chain, level } => {
                write!(f, "condition {c}: {} must come before {}", xi_name(*chain, *level), xi_name(*chain, level + 1))
            }
            Violation::Coupling { i, j, l, delta } => write!(
                f,
                "condition {c}: delta_{i},{j},{l} = {delta} is nonzero but chain {l} does not entirely precede {}",
                xi_name(*i, *j)
            ),
            Violation::Dependency { i, j, l, delta, var } => write!(
                f,
                "condition {c}: delta_{i},{j},{l} = {delta} depends on {var}, which comes after {}",
                xi_name(*i, *j)
            ),
            Violation::Disturbance { i, j, p, var } => {
                write!(f, "condition {c}: p_{i},{j} = {p} depends on {var}, which comes after {}", xi_name(*i, *j))
            }
            Violation::Drift { i, j, drift, var } => {
                write!(f, "condition {c}: drift {drift} of {} depends on {var}, which comes after it", xi_name(*i, *j))
            }
        }
    }
}

/// Checks κ against conditions 2(a)-(c); `disturbance` extends 2(c) to the
/// disturbance terms. Violations are sorted by the κ position they concern.
pub fn validate_order(
    sys: &ChainSystem,
    kappa: &Order,
    disturbance: bool,
) -> Result<Vec<Violation>, BackstepError> {
    check_cover(sys, kappa)?;
    let pos = |i: usize, j: usize| kappa.position(i, j).unwrap();
    let mut out = Vec::new();
    for (i0, &qi) in sys.q.iter().enumerate() {
        let i = i0 + 1;
        for j in 1..qi {
            if pos(i, j) > pos(i, j + 1) {
                out.push(Violation::Monotone { chain: i, level: j });
            }
        }
        for j in 1..=qi {
            let here = pos(i, j);
            // Free state variables that may not appear at this step.
            let late = |e: &Expr| -> Option<String> {
                e.free_vars()
                    .into_iter()
                    .find_map(|s| match sys.lookup(&s) {
                        Some(Var::Xi(a, b)) if b > 1 && pos(a, b) > here => Some(s.to_string()),
                        _ => None,
                    })
            };
            let k = sys.index(Var::Xi(i, j));
            let mut drift = sys.nominal[k].clone();
            if j < qi {
                drift = drift - Expr::sym(&xi_name(i, j + 1));
            }
            for l in 1..=sys.m() {
                let d = sys.delta(i, j, l);
                if is_zero(&d) {
                    continue;
                }
                drift = drift - &d * Expr::sym(&v_name(l));
                if l == i && j == qi {
                    continue;
                }
                if (1..=sys.q[l - 1]).any(|b| pos(l, b) >= here) {
                    out.push(Violation::Coupling {
                        i,
                        j,
                        l,
                        delta: d.to_string(),
                    });
                }
                if let Some(var) = late(&d) {
                    out.push(Violation::Dependency {
                        i,
                        j,
                        l,
                        delta: d.to_string(),
                        var,
                    });
                }
            }
            let drift = drift.simplify();
            if let Some(var) = late(&drift) {
                out.push(Violation::Drift {
                    i,
                    j,
                    drift: drift.to_string(),
                    var,
                });
            }
            if disturbance {
                let p = &sys.disturbance[k];
                if let Some(var) = late(p) {
                    out.push(Violation::Disturbance {
                        i,
                        j,
                        p: p.to_string(),
                        var,
                    });
                }
            }
        }
    }
    out.sort_by_key(|v| {
        let (i, j) = v.at();
        pos(i, j)
    });
    Ok(out)
}

pub(crate) fn check_cover(sys: &ChainSystem, kappa: &Order) -> Result<(), BackstepError> {
    let mut seen = std::collections::HashSet::new();
    for &(i, j) in &kappa.0 {
        if i == 0 || i > sys.m() || j == 0 || j > sys.q[i - 1] {
            return Err(BackstepError::MalformedOrder(format!(
                "xi{i}_{j} is not a chain variable"
            )));
        }
        if !seen.insert((i, j)) {
            return Err(BackstepError::MalformedOrder(format!(
                "xi{i}_{j} appears twice"
            )));
        }
    }
    if seen.len() != sys.n_d() {
        return Err(BackstepError::MalformedOrder(format!(
            "κ lists {} of {} chain variables",
            seen.len(),
            sys.n_d()
        )));
    }
    Ok(())
}
