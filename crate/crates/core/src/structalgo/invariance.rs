use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symcore::{Expr, Sym, SymMatrix};
use crate::sysmodel::{AffineSystem, Domain};

use super::{run_structure, StructConfig, StructError, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// `x = T z` with `T` integer and unimodular.
    StateLinear,
    /// `u = Γ(x) ũ`.
    Input,
    /// `ỹ = Γ_o y`.
    Output,
    /// `u = K(x) + ũ`.
    Feedback,
    /// `f + F h`.
    Injection,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::StateLinear,
        TransformKind::Input,
        TransformKind::Output,
        TransformKind::Feedback,
        TransformKind::Injection,
    ];
}

#[derive(Debug, Clone)]
pub enum Transform {
    StateLinear(SymMatrix),
    Input(SymMatrix),
    Output(SymMatrix),
    Feedback(Vec<Expr>),
    Injection(SymMatrix),
}

fn small(rng: &mut ChaCha8Rng) -> Expr {
    Expr::int(rng.gen_range(-2..=2))
}

/// Unit lower times unit upper, with integer entries; determinant 1.
fn unimodular(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let l = SymMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Expr::one()
        } else if i > j {
            small(rng)
        } else {
            Expr::zero()
        }
    });
    let u = SymMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Expr::one()
        } else if i < j {
            small(rng)
        } else {
            Expr::zero()
        }
    });
    l.mul(&u)
}

fn state(sys: &AffineSystem, rng: &mut ChaCha8Rng) -> Expr {
    Expr::sym(&sys.states[rng.gen_range(0..sys.n())])
}

pub fn random_transform(kind: TransformKind, sys: &AffineSystem, seed: u64) -> Transform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    match kind {
        TransformKind::StateLinear => {
            // sparse so the transformed expressions stay small
            let mut t = SymMatrix::identity(n);
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            if j == i {
                j = (i + 1) % n;
            }
            t.set(i, j, Expr::int(if rng.gen_bool(0.5) { 1 } else { -1 }));
            Transform::StateLinear(t)
        }
        TransformKind::Input => {
            let c = unimodular(&mut rng, m);
            let mut lower = SymMatrix::identity(m);
            for i in 1..m {
                let j = rng.gen_range(0..i);
                lower.set(i, j, small(&mut rng) * state(sys, &mut rng));
            }
            Transform::Input(lower.mul(&c))
        }
        TransformKind::Output => Transform::Output(unimodular(&mut rng, p)),
        TransformKind::Feedback => Transform::Feedback(
            (0..m)
                .map(|_| {
                    small(&mut rng) * state(sys, &mut rng)
                        + small(&mut rng) * state(sys, &mut rng) * state(sys, &mut rng)
                })
                .collect(),
        ),
        TransformKind::Injection => {
            let mut f = SymMatrix::from_fn(n, p, |_, _| small(&mut rng));
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..p));
            f.set(i, j, state(sys, &mut rng));
            Transform::Injection(f)
        }
    }
}

pub fn apply_transform(sys: &AffineSystem, t: &Transform) -> Result<AffineSystem, StructError> {
    let col = |v: &[Expr]| SymMatrix::column(v.to_vec());
    let simp = |m: SymMatrix| m.map(|e| e.simplify());
    match t {
        Transform::StateLinear(tm) => {
            let tinv = tm
                .inverse()
                .ok_or_else(|| StructError::Eval("state transform is singular".into()))?;
            let z = tm.mul(&col(&sys.states.iter().map(Expr::sym).collect::<Vec<_>>()));
            let map: HashMap<Sym, Expr> = sys.states.iter().cloned().zip(z.col(0)).collect();
            let f = simp(tinv.mul(&col(&sys.f).subs(&map))).col(0);
            let g = simp(tinv.mul(&sys.g.subs(&map)));
            let h: Vec<Expr> = sys.h.iter().map(|e| e.subs(&map).simplify()).collect();
            // largest cube whose image under T stays in the original box
            let tv = tm
                .eval(&[], &[])
                .map_err(|e| StructError::Eval(e.to_string()))?;
            let w = (0..sys.n())
                .map(|r| {
                    let half = sys.domain.hi[r].min(-sys.domain.lo[r]);
                    half / tv.row(r).iter().map(|v| v.abs()).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            let dom = Domain {
                lo: vec![-w; sys.n()],
                hi: vec![w; sys.n()],
            };
            Ok(AffineSystem::new(sys.states.clone(), f, g, h, dom)?)
        }
        Transform::Input(gm) => {
            Ok(sys.with_parts(sys.f.clone(), simp(sys.g.mul(gm)), sys.h.clone())?)
        }
        Transform::Output(o) => Ok(sys.with_parts(
            sys.f.clone(),
            sys.g.clone(),
            simp(o.mul(&col(&sys.h))).col(0),
        )?),
        Transform::Feedback(k) => {
            let f = simp(col(&sys.f).add(&sys.g.mul(&col(k)))).col(0);
            Ok(sys.with_parts(f, sys.g.clone(), sys.h.clone())?)
        }
        Transform::Injection(fm) => {
            let f = simp(col(&sys.f).add(&fm.mul(&col(&sys.h)))).col(0);
            Ok(sys.with_parts(f, sys.g.clone(), sys.h.clone())?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub kind: TransformKind,
    pub base_q: Vec<usize>,
    /// `(seed, q or error)` per trial.
    pub trials: Vec<(u64, Result<Vec<usize>, String>)>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.trials
            .iter()
            .all(|(_, r)| r.as_ref().is_ok_and(|q| *q == self.base_q))
    }
}

/// Box scale for reruns: transforms can move singular surfaces of `L_gΩ`
/// into the original box, and the invariance is only local.
pub const LOCAL_SCALE: f64 = 0.3;

/// Reruns the chosen algorithm after `trials` seeded transforms, on
/// the transformed box scaled by [`LOCAL_SCALE`].
pub fn invariance_harness(
    sys: &AffineSystem,
    cfg: &StructConfig,
    variant: Variant,
    kind: TransformKind,
    trials: usize,
    seed: u64,
) -> Result<InvarianceReport, StructError> {
    let base_q = run_structure(sys, cfg, variant)?.q;
    let trials = (0..trials as u64)
        .map(|t| {
            let s = seed.wrapping_mul(1000).wrapping_add(t);
            let res = apply_transform(sys, &random_transform(kind, sys, s))
                .and_then(|mut ts| {
                    ts.domain = ts.domain.scaled(LOCAL_SCALE);
                    run_structure(&ts, cfg, variant)
                })
                .map(|o| o.q)
                .map_err(|e| e.to_string());
            (s, res)
        })
        .collect();
    Ok(InvarianceReport {
        kind,
        base_q,
        trials,
    })
}
