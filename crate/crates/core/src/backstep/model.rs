use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use crate::structalgo::NormalForm;
use crate::symcore::{diff, is_zero, parse, Expr, Sym};
use crate::sysmodel::{parse_entry, Entry, Section, SectionReader, SysError};

use super::BackstepError;

/// A state of a chain system: an internal state or `ξ_{i,j}` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Eta(usize),
    Xi(usize, usize),
}

/// `η̇ = f0(η, ξ, v) + p0`, `ξ̇_{i,j} = ξ_{i,j+1} + Σ δ_{i,j,l} v_l + p_{i,j}`,
/// `ξ̇_{i,q_i} = v_i + p_{i,q_i}`, with disturbances `w`.
///
/// States are ordered `η` first, then `ξ` chain by chain. Names of `ξ_{i,j}`
/// are `xi{i}_{j}` and inputs are `v{i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSystem {
    pub eta: Vec<Sym>,
    pub q: Vec<usize>,
    pub states: Vec<Sym>,
    /// Right-hand sides at `w = 0`.
    pub nominal: Vec<Expr>,
    /// Remaining `w`-dependent parts.
    pub disturbance: Vec<Expr>,
    pub w: Vec<Sym>,
    /// User bounds `|p_k| ≤ R_k |w|`.
    pub bounds: Vec<Option<Expr>>,
    pub outputs: Vec<Expr>,
    pub params: BTreeMap<String, f64>,
    /// Feedback `v`, present in exported controller files.
    pub control: Option<Vec<Expr>>,
    pub storage: Option<Expr>,
}

const SECTIONS: &[&str] = &[
    "eta",
    "chains",
    "dynamics",
    "disturbance",
    "bounds",
    "outputs",
    "parameters",
    "control",
    "storage",
];

pub(crate) fn xi_name(i: usize, j: usize) -> Sym {
    Sym::from(format!("xi{i}_{j}").as_str())
}

pub(crate) fn v_name(i: usize) -> Sym {
    Sym::from(format!("v{i}").as_str())
}

impl ChainSystem {
    /// Builds a chain system from full right-hand sides. `dynamics` must
    /// cover every `η`; chain rows default to `ξ_{i,j+1}` or `v_i`.
    pub fn new(
        eta: Vec<Sym>,
        q: Vec<usize>,
        dynamics: &[(&str, Expr)],
        w: Vec<Sym>,
    ) -> Result<ChainSystem, BackstepError> {
        if q.contains(&0) {
            return Err(BackstepError::Shape(
                "chain lengths must be positive".into(),
            ));
        }
        let mut states = eta.clone();
        for (i, &qi) in q.iter().enumerate() {
            states.extend((1..=qi).map(|j| xi_name(i + 1, j)));
        }
        let mut full: Vec<Option<Expr>> = vec![None; states.len()];
        for (name, e) in dynamics {
            let k = states
                .iter()
                .position(|s| &**s == *name)
                .ok_or_else(|| BackstepError::Sys(SysError::UnknownVariable(name.to_string())))?;
            full[k] = Some(e.clone());
        }
        let mut k = eta.len();
        for (i, &qi) in q.iter().enumerate() {
            for j in 1..=qi {
                if full[k].is_none() {
                    full[k] = Some(if j < qi {
                        Expr::sym(&xi_name(i + 1, j + 1))
                    } else {
                        Expr::sym(&v_name(i + 1))
                    });
                }
                k += 1;
            }
        }
        let mut nominal = Vec::with_capacity(states.len());
        let mut disturbance = Vec::with_capacity(states.len());
        let zero_w: HashMap<Sym, Expr> = w.iter().map(|s| (s.clone(), Expr::zero())).collect();
        for (k, e) in full.into_iter().enumerate() {
            let e =
                e.ok_or_else(|| BackstepError::Shape(format!("no dynamics for `{}`", states[k])))?;
            let nom = e.subs(&zero_w).simplify();
            let dist = (&e - &nom).simplify();
            nominal.push(nom);
            disturbance.push(dist);
        }
        let outputs = (1..=q.len()).map(|i| Expr::sym(&xi_name(i, 1))).collect();
        let n = states.len();
        Ok(ChainSystem {
            eta,
            q,
            states,
            nominal,
            disturbance,
            w,
            bounds: vec![None; n],
            outputs,
            params: BTreeMap::new(),
            control: None,
            storage: None,
        })
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn n_d(&self) -> usize {
        self.q.iter().sum()
    }

    pub fn xi(&self, i: usize, j: usize) -> Sym {
        xi_name(i, j)
    }

    pub fn inputs(&self) -> Vec<Sym> {
        (1..=self.m()).map(v_name).collect()
    }

    /// Position of a state in `states`.
    pub fn index(&self, v: Var) -> usize {
        match v {
            Var::Eta(k) => k,
            Var::Xi(i, j) => self.eta.len() + self.q[..i - 1].iter().sum::<usize>() + j - 1,
        }
    }

    pub fn var(&self, k: usize) -> Var {
        if k < self.eta.len() {
            return Var::Eta(k);
        }
        let mut r = k - self.eta.len();
        for (i, &qi) in self.q.iter().enumerate() {
            if r < qi {
                return Var::Xi(i + 1, r + 1);
            }
            r -= qi;
        }
        panic!("state index {k} out of range")
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.states
            .iter()
            .position(|s| &**s == name)
            .map(|k| self.var(k))
    }

    /// `δ_{i,j,l}` (1-based), the coefficient of `v_l` in `ξ̇_{i,j}`.
    pub fn delta(&self, i: usize, j: usize, l: usize) -> Expr {
        diff(&self.nominal[self.index(Var::Xi(i, j))], &v_name(l)).simplify()
    }

    /// `R_k` with `|p_k| ≤ R_k |w|`: the user bound, `0` when undisturbed, or
    /// `|c|` when `p_k = c·w` for a single disturbance.
    pub fn bound(&self, k: usize) -> Result<Expr, BackstepError> {
        if let Some(r) = &self.bounds[k] {
            return Ok(r.clone());
        }
        let p = &self.disturbance[k];
        if is_zero(p) {
            return Ok(Expr::zero());
        }
        if self.w.len() == 1 {
            if let Some((c0, c1)) = p.affine_in(&self.w[0]) {
                if is_zero(&c0) {
                    return Ok(c1.abs());
                }
            }
        }
        Err(BackstepError::MissingBound(self.states[k].clone()))
    }

    pub fn disturbed(&self) -> bool {
        self.disturbance.iter().any(|p| !is_zero(p))
    }

    /// Numeric parameter bindings as expressions.
    pub fn param_map(&self) -> HashMap<Sym, Expr> {
        self.params
            .iter()
            .map(|(k, v)| (Sym::from(k.as_str()), Expr::float(*v)))
            .collect()
    }

    /// Square chain form of an infinite-zero normal form (`m_e = 0`, chart
    /// inverse available).
    pub fn from_normal_form(nf: &NormalForm) -> Result<ChainSystem, BackstepError> {
        if nf.g_e.ncols() != 0 || nf.sigma.is_some() {
            return Err(BackstepError::Shape(
                "chain form needs a square infinite-zero normal form".into(),
            ));
        }
        let inv = |e: &Expr| {
            nf.to_nf(e)
                .ok_or_else(|| BackstepError::Shape("chart inverse unavailable".into()))
        };
        let rename: HashMap<Sym, Expr> = nf
            .xi_names
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, s)| (s.clone(), Expr::sym(&xi_name(i + 1, j + 1))))
            })
            .collect();
        let m = nf.q.len();
        let mut dynamics: Vec<(String, Expr)> = Vec::new();
        for (k, name) in nf.eta_names.iter().enumerate() {
            let mut e = inv(&nf.f_e[k])?;
            for l in 0..m {
                e = e + inv(nf.phi.get(k, l))? * Expr::sym(&v_name(l + 1));
            }
            dynamics.push((name.to_string(), e.subs(&rename).simplify()));
        }
        for (i, &qi) in nf.q.iter().enumerate() {
            for j in 1..qi {
                let mut e = Expr::sym(&xi_name(i + 1, j + 1));
                for l in 0..m {
                    let d = inv(&nf.delta[i][j - 1][l])?;
                    e = e + d * Expr::sym(&v_name(l + 1));
                }
                dynamics.push((xi_name(i + 1, j).to_string(), e.subs(&rename).simplify()));
            }
        }
        let dyn_ref: Vec<(&str, Expr)> = dynamics
            .iter()
            .map(|(n, e)| (n.as_str(), e.clone()))
            .collect();
        ChainSystem::new(nf.eta_names.clone(), nf.q.clone(), &dyn_ref, Vec::new())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ChainSystem, BackstepError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SysError::Io(format!("{}: {e}", path.as_ref().display())))?;
        ChainSystem::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ChainSystem, BackstepError> {
        let secs = SectionReader::read(text, SECTIONS)?;
        let find = |name: &str| secs.iter().find(|s| s.name == name);
        let need = |name: &str| {
            find(name).ok_or_else(|| SysError::Parse {
                line: 1,
                col: 1,
                msg: format!("missing section [{name}]"),
            })
        };
        let eta: Vec<Sym> = need("eta")?
            .items()?
            .into_iter()
            .map(|e| Sym::from(e.text.as_str()))
            .collect();
        let chains = need("chains")?;
        let q = chains
            .items()?
            .iter()
            .map(|e| {
                e.text
                    .parse::<usize>()
                    .map_err(|_| chains.err(format!("bad chain length `{}`", e.text)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let w: Vec<Sym> = match find("disturbance") {
            Some(s) => s
                .items()?
                .into_iter()
                .map(|e| Sym::from(e.text.as_str()))
                .collect(),
            None => Vec::new(),
        };
        let dynamics = need("dynamics")?.bindings()?;
        let parsed = dynamics
            .iter()
            .map(|(name, e)| Ok((name.as_str(), parse_at(e)?)))
            .collect::<Result<Vec<_>, SysError>>()?;
        let mut sys = ChainSystem::new(eta, q, &parsed, w)?;
        if let Some(b) = find("bounds") {
            for (name, e) in b.bindings()? {
                let k = sys
                    .states
                    .iter()
                    .position(|s| **s == *name)
                    .ok_or_else(|| bad(b, &name))?;
                sys.bounds[k] = Some(parse_at(&e)?);
            }
        }
        if let Some(o) = find("outputs") {
            sys.outputs = o.exprs()?;
        }
        if let Some(p) = find("parameters") {
            for (name, e) in p.bindings()? {
                let v = parse_at(&e)?.as_num().ok_or_else(|| SysError::Parse {
                    line: e.line,
                    col: e.col + 1,
                    msg: "parameter must be numeric".into(),
                })?;
                sys.params.insert(name, v.to_f64());
            }
        }
        for e in sys.nominal.iter().chain(&sys.disturbance) {
            if let Some(u) = sys.unknown_symbols(e).first() {
                return Err(SysError::UnknownVariable(u.to_string()).into());
            }
        }
        if let Some(c) = find("control") {
            let mut v = vec![Expr::zero(); sys.m()];
            for (name, e) in c.bindings()? {
                let i = (1..=sys.m())
                    .find(|&i| *v_name(i) == *name)
                    .ok_or_else(|| bad(c, &name))?;
                v[i - 1] = parse_at(&e)?;
            }
            sys.control = Some(v);
        }
        if let Some(s) = find("storage") {
            let entry = s.entries.first().ok_or_else(|| s.err("empty [storage]"))?;
            let body = match entry.text.split_once('=') {
                Some((lhs, rhs)) if lhs.trim() == "W" => rhs.trim().to_string(),
                _ => entry.text.clone(),
            };
            sys.storage = Some(
                parse(&body).map_err(|err| SysError::parse_at(entry.line, entry.col + 1, &err))?,
            );
        }
        Ok(sys)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let names = |v: &[Sym]| {
            v.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "[eta]\n{}\n", names(&self.eta));
        let qs: Vec<String> = self.q.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "[chains]\n{}\n", qs.join(", "));
        if !self.w.is_empty() {
            let _ = writeln!(s, "[disturbance]\n{}\n", names(&self.w));
        }
        s.push_str("[dynamics]\n");
        for (k, name) in self.states.iter().enumerate() {
            let _ = writeln!(
                s,
                "{name} = {}",
                self.nominal[k].clone() + self.disturbance[k].clone()
            );
        }
        if self.bounds.iter().any(Option::is_some) {
            s.push_str("\n[bounds]\n");
            for (k, b) in self.bounds.iter().enumerate() {
                if let Some(b) = b {
                    let _ = writeln!(s, "{} = {b}", self.states[k]);
                }
            }
        }
        let outs: Vec<String> = self.outputs.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(s, "\n[outputs]\n[{}]", outs.join(", "));
        if !self.params.is_empty() {
            s.push_str("\n[parameters]\n");
            for (k, v) in &self.params {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        if let Some(v) = &self.control {
            s.push_str("\n[control]\n");
            for (i, e) in v.iter().enumerate() {
                let _ = writeln!(s, "v{} = {e}", i + 1);
            }
        }
        if let Some(w) = &self.storage {
            let _ = writeln!(s, "\n[storage]\nW = {w}");
        }
        s
    }

    /// Free symbols of `e` that are neither states, inputs, disturbances nor
    /// bound parameters.
    pub(crate) fn unknown_symbols(&self, e: &Expr) -> Vec<Sym> {
        e.free_vars()
            .into_iter()
            .filter(|s| {
                !self.states.contains(s)
                    && !self.w.contains(s)
                    && !self.params.contains_key(&**s)
                    && !(1..=self.m()).any(|i| v_name(i) == *s)
            })
            .collect()
    }
}

fn parse_at(e: &Entry) -> Result<Expr, SysError> {
    parse_entry(e)
}

fn bad(sec: &Section, name: &str) -> SysError {
    SysError::Parse {
        line: sec.line,
        col: 1,
        msg: format!("unknown name `{name}` in [{}]", sec.name),
    }
}
