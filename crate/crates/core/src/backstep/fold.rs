use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symcore::{diff, is_zero, Expr, Program, Sym};

use super::lowgain::low_gain;
use super::model::{v_name, xi_name};
use super::order::{self, validate_order};
use super::step::{core, Step};
use super::{
    BackstepError, ChainSystem, ControlLaw, LedgerRecord, Order, Stabilizer, StabilizerCheck, Var,
    EPS, GAMMA,
};

/// Sampling and gain settings of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    /// Per-step gains in κ order; missing entries are 1.
    pub gains: Vec<Expr>,
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the sampling box.
    pub radius: f64,
    /// Half-width used by semi-global designs, which are only local checks.
    pub local_radius: f64,
    pub tol: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            gains: Vec::new(),
            samples: 500,
            seed: 42,
            radius: 1.0,
            local_radius: 0.1,
            tol: 1e-9,
        }
    }
}

/// Split of the attenuation budget across disturbed steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// `γ_s² = (γ + sε/n_d)² − (γ + (s−1)ε/n_d)²`; total supply `(γ+ε)²`.
    Proof,
    /// `γ²/N` per disturbed stage (the base counts when `p0 ≢ 0`); more than
    /// `N` disturbed stages is an error. Total supply at most `γ²`.
    EqualSplit(usize),
}

/// Sampled decrease (or dissipation) condition of the final storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseCheck {
    pub points: usize,
    /// Largest sampled residual; `NaN` when it could not be evaluated.
    pub max: f64,
    pub pass: bool,
}

struct Dissipation {
    budget: Budget,
    /// Supply consumed so far.
    used: Expr,
    steps: usize,
}

pub(crate) struct Fold<'a> {
    sys: &'a ChainSystem,
    opts: &'a DesignOptions,
    x: Vec<usize>,
    target: Vec<Option<Expr>>,
    v: Vec<Option<Expr>>,
    w: Expr,
    params: HashMap<Sym, Expr>,
    dissipation: Option<Dissipation>,
    ledger: Vec<LedgerRecord>,
    warnings: Vec<String>,
}

impl<'a> Fold<'a> {
    /// Fold seeded with `X = η`, `ξ_{l,1} → φ_l` and storage `V`.
    pub(crate) fn nominal(
        sys: &'a ChainSystem,
        stab: &Stabilizer,
        opts: &'a DesignOptions,
    ) -> Result<Fold<'a>, BackstepError> {
        if stab.phi.len() != sys.m() {
            return Err(BackstepError::Shape(format!(
                "{} virtual laws for {} chains",
                stab.phi.len(),
                sys.m()
            )));
        }
        let mut fold = Fold::empty(sys, opts);
        fold.x = (0..sys.eta.len()).collect();
        for (l, phi) in stab.phi.iter().enumerate() {
            fold.target[sys.index(Var::Xi(l + 1, 1))] = Some(phi.clone());
        }
        fold.w = stab.v.clone();
        Ok(fold)
    }

    fn empty(sys: &'a ChainSystem, opts: &'a DesignOptions) -> Fold<'a> {
        Fold {
            sys,
            opts,
            x: Vec::new(),
            target: vec![None; sys.n()],
            v: vec![None; sys.m()],
            w: Expr::zero(),
            params: sys.param_map(),
            dissipation: None,
            ledger: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn syms(&self) -> Vec<Sym> {
        self.x.iter().map(|&k| self.sys.states[k].clone()).collect()
    }

    /// Replaces unstepped states by their targets and known inputs by their
    /// laws; anything else left over is undetermined.
    fn close(&self, e: &Expr, current: Option<usize>, at: &Sym) -> Result<Expr, BackstepError> {
        let mut map = HashMap::new();
        for (k, t) in self.target.iter().enumerate() {
            if let Some(t) = t {
                if !self.x.contains(&k) && current != Some(k) {
                    map.insert(self.sys.states[k].clone(), t.clone());
                }
            }
        }
        for (l, law) in self.v.iter().enumerate() {
            if let Some(law) = law {
                map.insert(v_name(l + 1), law.clone());
            }
        }
        let r = e.subs(&map);
        for s in r.free_vars() {
            let open = match self.sys.states.iter().position(|t| *t == s) {
                Some(k) => !self.x.contains(&k) && current != Some(k),
                None => (1..=self.sys.m()).any(|l| v_name(l) == s),
            };
            if open {
                return Err(BackstepError::Undetermined {
                    var: at.clone(),
                    input: s.to_string(),
                });
            }
        }
        Ok(r.simplify())
    }

    /// `Ẋ` of the current augmented state with every target substituted.
    fn closed_dynamics(&self, with_w: bool) -> Result<Vec<Expr>, BackstepError> {
        let at = Sym::from("W");
        self.x
            .iter()
            .map(|&k| {
                let mut e = self.sys.nominal[k].clone();
                if with_w {
                    e = e + &self.sys.disturbance[k];
                }
                self.close(&e, None, &at)
            })
            .collect()
    }

    /// `Ẇ`, or `Ẇ − Γ|w|² + |y|²` for dissipative folds.
    fn residual(&self) -> Result<Expr, BackstepError> {
        let dynamics = self.closed_dynamics(self.dissipation.is_some())?;
        let syms = self.syms();
        let rate = Expr::add_all(
            syms.iter()
                .zip(&dynamics)
                .map(|(s, f)| diff(&self.w, s) * f),
        );
        let Some(d) = &self.dissipation else {
            return Ok(rate.simplify());
        };
        let at = Sym::from("y");
        let w2 = Expr::add_all(self.sys.w.iter().map(|s| Expr::sym(s).pow(2)));
        let mut y2 = Vec::new();
        for y in &self.sys.outputs {
            y2.push(self.close(y, None, &at)?.pow(2));
        }
        Ok((rate - &d.used * w2 + Expr::add_all(y2)).simplify())
    }

    /// Largest sampled value of `e` over the augmented state (and `w`).
    fn sample_max(&self, e: &Expr, radius: f64) -> Option<f64> {
        sample(
            e,
            &self.vars(),
            &self.params,
            self.opts,
            radius,
            f64::max,
            f64::NEG_INFINITY,
        )
    }

    fn vars(&self) -> Vec<Sym> {
        let mut vars = self.syms();
        if self.dissipation.is_some() {
            vars.extend(self.sys.w.iter().cloned());
        }
        vars
    }

    pub(crate) fn base_check(&self, radius: f64) -> Result<StabilizerCheck, BackstepError> {
        let zero: HashMap<Sym, Expr> = self.syms().into_iter().map(|s| (s, Expr::zero())).collect();
        let v_at_zero = is_zero(&self.w.subs(&zero));
        let min_v = sample(
            &self.w,
            &self.syms(),
            &self.params,
            self.opts,
            radius,
            f64::min,
            f64::INFINITY,
        )
        .unwrap_or(f64::NAN);
        let residual = self.residual()?;
        let max_rate = self.sample_max(&residual, radius).unwrap_or(f64::NAN);
        let positive = self.x.is_empty() || min_v > 0.0;
        let pass = v_at_zero && positive && max_rate <= self.opts.tol;
        Ok(StabilizerCheck {
            v_at_zero,
            min_v,
            positive,
            max_rate,
            points: self.opts.samples,
            pass,
        })
    }

    fn step(&mut self, s: usize, i: usize, j: usize, radius: f64) -> Result<(), BackstepError> {
        let sys = self.sys;
        let k = sys.index(Var::Xi(i, j));
        let xi = sys.states[k].clone();
        let phi = self.target[k]
            .clone()
            .ok_or_else(|| BackstepError::Undetermined {
                var: xi.clone(),
                input: format!("target of {xi}"),
            })?;
        let qi = sys.q[i - 1];
        let virt = if j < qi { xi_name(i, j + 1) } else { v_name(i) };
        let rhs = &sys.nominal[k];
        if !is_zero(&(diff(rhs, &virt) - Expr::one())) {
            return Err(BackstepError::Shape(format!(
                "coefficient of {virt} in {xi}' is not 1"
            )));
        }
        let g = self.close(&(rhs - Expr::sym(&virt)).simplify(), Some(k), &xi)?;
        let f = self
            .x
            .iter()
            .map(|&r| self.close(&sys.nominal[r], Some(k), &xi))
            .collect::<Result<Vec<_>, _>>()?;
        let mut st = Step::new(self.syms(), f, xi.clone(), g);
        let c = self.opts.gains.get(s).cloned().unwrap_or_else(Expr::one);
        let mut slice = None;
        if let Some(d) = &self.dissipation {
            let mut bounds = Vec::with_capacity(self.x.len());
            for &r in &self.x {
                bounds.push(self.close(&sys.bound(r)?, Some(k), &xi)?);
            }
            let xb = self.close(&sys.bound(k)?, Some(k), &xi)?;
            st = st.with_bounds(bounds, xb);
            let gamma = Expr::var(GAMMA);
            slice = Some(match d.budget {
                Budget::Proof => {
                    let nd = Expr::int(sys.n_d() as i128);
                    let eps = Expr::var(EPS);
                    let hi = (&gamma + Expr::int(s as i128 + 1) * &eps / &nd).pow(2);
                    let lo = (&gamma + Expr::int(s as i128) * &eps / &nd).pow(2);
                    (hi - lo).simplify()
                }
                Budget::EqualSplit(n) => (gamma.pow(2) / Expr::int(n as i128)).simplify(),
            });
        }
        let out = core(&st, &phi, &self.w, &c, slice.as_ref())?;
        let mut budget = None;
        if let (Some(d), Some(g2)) = (self.dissipation.as_mut(), slice) {
            if !is_zero(&out.r_bar) {
                d.steps += 1;
                if let Budget::EqualSplit(n) = d.budget {
                    if d.steps > n {
                        return Err(BackstepError::BudgetExhausted {
                            steps: d.steps,
                            parts: n,
                        });
                    }
                }
                d.used = (&d.used + &g2).simplify();
                budget = Some(g2.to_string());
            }
        }
        let w_term = (Expr::sym(&xi) - &phi).pow(2) / Expr::int(2);
        if j < qi {
            self.target[sys.index(Var::Xi(i, j + 1))] = Some(out.u.clone());
        } else {
            self.v[i - 1] = Some(out.u.clone());
        }
        self.x.push(k);
        self.w = out.w;
        let margin = self
            .residual()
            .ok()
            .and_then(|r| self.sample_max(&r, radius));
        if let Some(m) = margin {
            if m > self.opts.tol {
                self.warnings.push(format!(
                    "step {xi}: sampled residual {m:.3e} exceeds {:.0e}",
                    self.opts.tol
                ));
            }
        }
        self.ledger.push(LedgerRecord {
            var: xi.to_string(),
            chain: i,
            level: j,
            target: phi.to_string(),
            gain: c.to_string(),
            w_term: w_term.simplify().to_string(),
            law: out.u.to_string(),
            budget,
            margin,
            low_gain: false,
        });
        Ok(())
    }

    fn run(
        &mut self,
        steps: &[(usize, usize)],
        offset: usize,
        radius: f64,
    ) -> Result<(), BackstepError> {
        for (s, &(i, j)) in steps.iter().enumerate() {
            self.step(offset + s, i, j, radius)?;
        }
        Ok(())
    }

    fn finish(mut self, base: StabilizerCheck, radius: f64) -> Result<ControlLaw, BackstepError> {
        let v = self
            .v
            .iter()
            .enumerate()
            .map(|(l, e)| {
                e.clone().ok_or_else(|| BackstepError::Undetermined {
                    var: v_name(l + 1),
                    input: v_name(l + 1).to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let zero: HashMap<Sym, Expr> = self
            .sys
            .states
            .iter()
            .map(|s| (s.clone(), Expr::zero()))
            .collect();
        for (l, e) in v.iter().enumerate() {
            let at0 = e.subs(&zero).simplify();
            if !is_zero(&at0) {
                self.warnings.push(format!("v{}(0) = {at0}, not 0", l + 1));
            }
        }
        let residual = self.residual()?;
        let max = self.sample_max(&residual, radius).unwrap_or(f64::NAN);
        let check = DecreaseCheck {
            points: self.opts.samples,
            max,
            pass: max <= self.opts.tol,
        };
        if !check.pass {
            self.warnings.push(format!(
                "final storage residual {max:.3e} exceeds {:.0e}",
                self.opts.tol
            ));
        }
        let supply = self.dissipation.as_ref().map(|d| d.used.clone());
        Ok(ControlLaw {
            states: self.sys.states.clone(),
            v,
            w: self.w,
            ledger: self.ledger,
            check,
            base,
            supply,
            warnings: self.warnings,
        })
    }
}

fn sample(
    e: &Expr,
    vars: &[Sym],
    params: &HashMap<Sym, Expr>,
    opts: &DesignOptions,
    radius: f64,
    pick: fn(f64, f64) -> f64,
    init: f64,
) -> Option<f64> {
    let e = e.subs(params);
    if e.free_vars().iter().any(|s| !vars.contains(s)) {
        return None;
    }
    let prog = Program::compile(&[e], vars).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = vec![0.0; vars.len()];
    let mut out = [0.0];
    let mut stack = Vec::new();
    let mut acc = init;
    for _ in 0..opts.samples {
        for xk in x.iter_mut() {
            *xk = rng.gen_range(-radius..=radius);
        }
        prog.eval_into(&x, &mut out, &mut stack);
        if out[0].is_finite() {
            acc = pick(acc, out[0]);
        }
    }
    acc.is_finite().then_some(acc)
}

fn require_order(sys: &ChainSystem, kappa: &Order, disturbance: bool) -> Result<(), BackstepError> {
    match validate_order(sys, kappa, disturbance)?.into_iter().next() {
        Some(v) => Err(BackstepError::OrderViolation(v)),
        None => Ok(()),
    }
}

fn reject(base: &StabilizerCheck) -> Result<(), BackstepError> {
    if !base.v_at_zero {
        return Err(BackstepError::Stabilizer("V(0) is not 0".into()));
    }
    if !base.positive {
        return Err(BackstepError::Stabilizer(format!(
            "sampled V reaches {:.3e}",
            base.min_v
        )));
    }
    if !base.pass {
        return Err(BackstepError::Stabilizer(format!(
            "sampled V' reaches {:.3e}",
            base.max_rate
        )));
    }
    Ok(())
}

/// Nominal backstepping along κ: every `ξ_{i,j}` is steered to its target
/// with `W += (ξ_{i,j} − φ_{i,j})²/2`, producing `φ_{i,j+1}` or `v_i`.
pub fn synthesize(
    sys: &ChainSystem,
    kappa: &Order,
    stab: &Stabilizer,
    opts: &DesignOptions,
) -> Result<ControlLaw, BackstepError> {
    require_order(sys, kappa, false)?;
    let mut fold = Fold::nominal(sys, stab, opts)?;
    let base = fold.base_check(opts.radius)?;
    reject(&base)?;
    if sys.disturbed() {
        fold.warnings
            .push("disturbance terms ignored by the nominal design".into());
    }
    fold.run(&kappa.0, 0, opts.radius)?;
    fold.finish(base, opts.radius)
}

/// Dissipative backstepping for the L2-gain problem with symbolic `gamma`
/// (and `eps` under [`Budget::Proof`]). Numeric values for sampling come
/// from the stabilizer or from `[parameters]`.
pub fn da_synthesize(
    sys: &ChainSystem,
    kappa: &Order,
    stab: &Stabilizer,
    budget: Budget,
    opts: &DesignOptions,
) -> Result<ControlLaw, BackstepError> {
    require_order(sys, kappa, true)?;
    if let Budget::EqualSplit(0) = budget {
        return Err(BackstepError::BudgetExhausted { steps: 1, parts: 0 });
    }
    let mut fold = Fold::nominal(sys, stab, opts)?;
    if let Some(g) = stab.gamma {
        fold.params.insert(Sym::from(GAMMA), Expr::float(g));
    }
    let g2 = Expr::var(GAMMA).pow(2);
    let base_disturbed = (0..sys.eta.len()).any(|k| !is_zero(&sys.disturbance[k]));
    fold.dissipation = Some(match budget {
        Budget::Proof => Dissipation {
            budget,
            used: g2,
            steps: 0,
        },
        Budget::EqualSplit(n) if base_disturbed => Dissipation {
            budget,
            used: (g2 / Expr::int(n as i128)).simplify(),
            steps: 1,
        },
        Budget::EqualSplit(_) => Dissipation {
            budget,
            used: Expr::zero(),
            steps: 0,
        },
    });
    for k in 0..sys.n() {
        sys.bound(k)?;
    }
    let base = fold.base_check(opts.radius)?;
    if !base.pass {
        fold.warnings.push(format!(
            "base dissipation condition fails: sampled residual {:.3e}",
            base.max_rate
        ));
    }
    fold.run(&kappa.0, 0, opts.radius)?;
    fold.finish(base, opts.radius)
}

/// Low-gain / high-gain design: the first `ℓ_i − 1` variables of each chain
/// are driven by a low-gain linear law with parameter `eps`, the rest are
/// backstepped along κ. `stab.v` is a Lyapunov function over `η` and the
/// slow variables; checks are local (`opts.local_radius`).
pub fn semi_global_synthesize(
    sys: &ChainSystem,
    levels: &[usize],
    kappa: &Order,
    stab: &Stabilizer,
    eps: f64,
    poles: Option<&[Vec<f64>]>,
    opts: &DesignOptions,
) -> Result<ControlLaw, BackstepError> {
    check_levels(sys, levels)?;
    order::check_cover(sys, kappa)?;
    let slow: Vec<(usize, usize)> = levels
        .iter()
        .enumerate()
        .flat_map(|(i, &l)| (1..l).map(move |j| (i + 1, j)))
        .collect();
    let prefix = &kappa.0[..slow.len()];
    if slow.iter().any(|p| !prefix.contains(p)) {
        return Err(BackstepError::MalformedOrder(format!(
            "the first {} entries of κ must be the low-gain variables",
            slow.len()
        )));
    }
    require_order(sys, kappa, false)?;
    let design = low_gain(levels, eps, poles)?;
    let radius = opts.local_radius;
    let mut fold = Fold::empty(sys, opts);
    fold.params.insert(Sym::from(EPS), Expr::float(eps));
    fold.x = (0..sys.eta.len())
        .chain(prefix.iter().map(|&(i, j)| sys.index(Var::Xi(i, j))))
        .collect();
    for (i0, &l) in levels.iter().enumerate() {
        let i = i0 + 1;
        let law = design.laws[i0].clone().unwrap_or_else(Expr::zero);
        if l <= sys.q[i0] {
            fold.target[sys.index(Var::Xi(i, l))] = Some(law);
        } else {
            fold.v[i0] = Some(law);
        }
    }
    fold.w = stab.v.clone();
    for &(i, j) in prefix {
        let l = levels[i - 1];
        let law = if j + 1 == l {
            design.laws[i - 1].clone().unwrap_or_else(Expr::zero)
        } else {
            Expr::sym(&xi_name(i, j + 1))
        };
        fold.ledger.push(LedgerRecord {
            var: xi_name(i, j).to_string(),
            chain: i,
            level: j,
            target: String::new(),
            gain: String::new(),
            w_term: String::new(),
            law: law.to_string(),
            budget: None,
            margin: None,
            low_gain: true,
        });
    }
    let base = fold.base_check(radius)?;
    reject(&base)?;
    fold.run(&kappa.0[slow.len()..], slow.len(), radius)?;
    fold.finish(base, radius)
}

fn check_levels(sys: &ChainSystem, levels: &[usize]) -> Result<(), BackstepError> {
    if levels.len() != sys.m() {
        return Err(BackstepError::Levels(format!(
            "{} lengths for {} chains",
            levels.len(),
            sys.m()
        )));
    }
    let q1 = sys.q[0];
    for (i, (&l, &qi)) in levels.iter().zip(&sys.q).enumerate() {
        let cap = if i == 0 { q1 + 1 } else { q1.min(qi + 1) };
        if l == 0 || l > cap {
            return Err(BackstepError::Levels(format!(
                "ℓ{} = {l} outside 1..={cap}",
                i + 1
            )));
        }
    }
    Ok(())
}
