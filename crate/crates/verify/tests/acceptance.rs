//! Acceptance criteria. Prints one verdict line per criterion, followed by
//! the failing sub-checks, and exits nonzero if a gating criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlstruct::backstep::*;
use nlstruct::linstruct::{linear_infinite_zeros, vector_relative_degree, LinearTriple};
use nlstruct::numerics::rank;
use nlstruct::simkit::*;
use nlstruct::structalgo::*;
use nlstruct::symcore::{compare, diff, equivalent, is_zero, parse, Expr, Sym};
use nlstruct::sysmodel::AffineSystem;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
}

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn chains(name: &str) -> (ChainSystem, Stabilizer) {
    let sys = ChainSystem::load(path(&format!("{name}.chains"))).unwrap();
    let stab = Stabilizer::load(path(&format!("{name}.stab"))).unwrap();
    (sys, stab)
}

/// Randomized numeric equivalence at 32 points, tolerance 1e-9.
fn same(a: &Expr, b: &Expr) -> bool {
    compare(a, b, 7).numeric
}

#[derive(Default)]
struct Checks(Vec<(String, bool)>, Vec<String>);

impl Checks {
    fn note(&mut self, text: String) {
        self.1.push(text);
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.0.push((name.into(), ok));
        ok
    }

    fn pass(&self) -> bool {
        self.0.iter().all(|c| c.1)
    }
}

/// `Ẇ` along the nominal closed loop with feedback `v`.
fn rate(sys: &ChainSystem, v: &[Expr], w: &Expr) -> Expr {
    let map: HashMap<Sym, Expr> = sys.inputs().into_iter().zip(v.iter().cloned()).collect();
    Expr::add_all(
        sys.states
            .iter()
            .zip(&sys.nominal)
            .map(|(s, f)| diff(w, s) * f.subs(&map)),
    )
    .simplify()
}

fn structure() -> Checks {
    let mut c = Checks::default();
    let cfg = StructConfig::default();
    let timed = |c: &mut Checks, name: &str, t: Instant| {
        c.check(
            format!("{name} under 10 s ({:.2} s)", t.elapsed().as_secs_f64()),
            t.elapsed().as_secs_f64() < 10.0,
        );
    };

    let t = Instant::now();
    let sys = AffineSystem::load(path("ex31.sys")).unwrap();
    match infinite_zero_algorithm(&sys, &cfg) {
        Ok(out) => {
            c.check(format!("ex31 rho = {:?}", out.rho), out.rho == [0, 1, 2]);
            c.check(format!("ex31 q = {:?}", out.q), out.q == [2, 3]);
            c.check(
                format!("ex31 {:?}", out.invertibility),
                out.invertibility == Invertibility::Invertible,
            );
            let delta = build_normal_form(&sys, &out, &NormalFormOptions::default())
                .ok()
                .and_then(|nf| nf.delta_nf(2, 2, 1));
            c.check(
                "ex31 delta_2,2,1 = xi2_3/(1 - xi1_1)",
                delta.is_some_and(|d| equivalent(&d, &e("xi2_3/(1 - xi1_1)"))),
            );
        }
        Err(err) => {
            c.check(format!("ex31: {err}"), false);
        }
    }
    timed(&mut c, "ex31", t);

    let t = Instant::now();
    let sys = AffineSystem::load(path("ex32.sys")).unwrap();
    match infinite_zero_algorithm(&sys, &cfg) {
        Ok(out) => {
            c.check(format!("ex32 q = {:?}", out.q), out.q == [1]);
            let split = build_normal_form(&sys, &out, &NormalFormOptions::default())
                .ok()
                .and_then(|nf| zero_dynamics(&nf).split);
            let a = split.as_ref().map(|s| s.a_aa.clone());
            c.check(
                format!(
                    "ex32 zero dynamics z_a' = -z_a (A_aa = {:?})",
                    a.as_ref().map(|a| a.as_slice().to_vec())
                ),
                a.is_some_and(|a| a.nrows() == 1 && (a[(0, 0)] + 1.0).abs() < 1e-9),
            );
        }
        Err(err) => {
            c.check(format!("ex32: {err}"), false);
        }
    }
    timed(&mut c, "ex32", t);

    let t = Instant::now();
    let sys = AffineSystem::load(path("ex33.sys")).unwrap();
    match zero_output_algorithm(&sys, &cfg) {
        Ok(out) => {
            c.check(format!("ex33 rho = {:?}", out.rho), out.rho == [1, 2]);
            c.check(format!("ex33 q = {:?}", out.q), out.q == [1, 2]);
            let f0 = build_normal_form(&sys, &out, &NormalFormOptions::default())
                .ok()
                .map(|nf| zero_dynamics(&nf).f0);
            c.check(
                "ex33 zero dynamics eta' = -eta^3",
                f0.is_some_and(|f| f.len() == 1 && equivalent(&f[0], &e("-eta1^3"))),
            );
        }
        Err(err) => {
            c.check(format!("ex33: {err}"), false);
        }
    }
    timed(&mut c, "ex33", t);

    let t = Instant::now();
    let sys = AffineSystem::load(path("ex34.sys")).unwrap();
    match infinite_zero_algorithm(&sys, &cfg) {
        Ok(out) => {
            c.check(
                format!("ex34 {:?}", out.invertibility),
                out.invertibility == Invertibility::LeftInvertible,
            );
            c.check(
                format!(
                    "ex34 {} infinite zeros of order 1 (q = {:?})",
                    sys.m(),
                    out.q
                ),
                out.q.len() == sys.m() && out.q.iter().all(|&q| q == 1),
            );
        }
        Err(err) => {
            c.check(format!("ex34: {err}"), false);
        }
    }
    timed(&mut c, "ex34", t);
    c
}

fn linear() -> Checks {
    let mut c = Checks::default();
    let tol = 1e-9;
    let q = linear_infinite_zeros(&LinearTriple::counter3(1.0), tol).0;
    c.check(format!("counter3 q = {q:?}"), q == [1, 4]);
    let q = linear_infinite_zeros(&LinearTriple::exam1(1.0), tol).0;
    c.check(format!("exam1 q = {q:?}"), q == [1, 3]);
    let t = LinearTriple::exam_sch();
    let r = vector_relative_degree(&t, tol);
    c.check(
        format!("exam_sch vector relative degree {r:?}"),
        r == Ok(None),
    );
    let moved = t.with_output_transform(&DMatrix::from_row_slice(2, 2, &[1., 0., -1., 1.]));
    let r = vector_relative_degree(&moved, tol);
    c.check(
        format!("exam_sch after T_o: {r:?}"),
        r == Ok(Some(vec![1, 2])),
    );
    c
}

fn invariance() -> Checks {
    let mut c = Checks::default();
    let cfg = StructConfig::default();
    let systems = [
        ("ex31", AffineSystem::load(path("ex31.sys")).unwrap()),
        ("ex32", AffineSystem::load(path("ex32.sys")).unwrap()),
        ("counter3", LinearTriple::counter3(1.0).to_affine()),
    ];
    for (name, sys) in &systems {
        for kind in TransformKind::ALL {
            match invariance_harness(sys, &cfg, Variant::InfiniteZero, kind, 20, 11) {
                Ok(rep) => {
                    let bad = rep
                        .trials
                        .iter()
                        .filter(|(_, r)| r.as_ref() != Ok(&rep.base_q))
                        .count();
                    c.check(
                        format!(
                            "{name} {kind:?}: {bad} of 20 trials change q = {:?}",
                            rep.base_q
                        ),
                        rep.holds(),
                    );
                }
                Err(err) => {
                    c.check(format!("{name} {kind:?}: {err}"), false);
                }
            }
        }
    }
    c
}

fn backstepping() -> Checks {
    let mut c = Checks::default();
    let (sys, stab) = chains("vrd22");
    let opts = DesignOptions::default();
    let chain = synthesize(&sys, &Order::chain_by_chain(&sys.q), &stab, &opts).unwrap();
    let level = synthesize(&sys, &Order::level_by_level(&sys.q), &stab, &opts).unwrap();
    let reference_chain = [
        e("-3*eta - 5*xi1_1 - 3*xi1_2"),
        e("-11*eta - 4*xi1_1 - 6*xi1_2 - 11*xi2_1 - 3*xi2_2"),
    ];
    let reference_level = [
        e("-5*eta - 5*xi1_1 - 3*xi1_2 - 2*xi2_1"),
        e("-9*eta - 6*xi1_1 - 2*xi1_2 - 6*xi2_1 - 2*xi2_2"),
    ];
    for (name, law, reference) in [
        ("chain-by-chain", &chain, &reference_chain),
        ("level-by-level", &level, &reference_level),
    ] {
        for i in 0..2 {
            c.check(
                format!(
                    "{name} v{} = {} (reference {})",
                    i + 1,
                    law.v[i],
                    reference[i]
                ),
                law.v[i] == reference[i],
            );
        }
    }
    let v_chain = e(
        "(eta^2 + (xi1_1 + eta)^2 + (xi1_2 + 2*eta + 2*xi1_1)^2 + (xi2_1 + eta)^2 \
                     + (xi2_2 + 8*eta + 6*xi1_1 + 2*xi1_2 + 2*xi2_1)^2)/2",
    );
    let v_level = e(
        "(eta^2 + (xi1_1 + eta)^2 + (xi2_1 + eta)^2 + (xi1_2 + 2*eta + 2*xi1_1)^2 \
                     + (xi2_2 + 4*eta + 2*xi1_1 + xi2_1)^2)/2",
    );
    let decays = |v: &[Expr], w: &Expr| is_zero(&(rate(&sys, v, w) + Expr::int(2) * w));
    c.check(
        "chain-by-chain: reference V, reference law give V' = -2V",
        decays(&reference_chain, &v_chain),
    );
    c.check(
        "level-by-level: reference V, reference law give V' = -2V",
        decays(&reference_level, &v_level),
    );
    c.check(
        "chain-by-chain: generated W equals reference V",
        same(&chain.w, &v_chain),
    );
    c.check(
        "level-by-level: generated W equals reference V",
        same(&level.w, &v_level),
    );
    c.check(
        "chain-by-chain: generated law gives W' = -2W",
        decays(&chain.v, &chain.w),
    );
    c.check(
        "level-by-level: generated law gives W' = -2W",
        decays(&level.v, &level.w),
    );

    let (sys, stab) = chains("mixed");
    let kappa = Order::parse("xi1_1, xi3_1, xi3_2, xi2_1, xi2_2, xi3_3, xi3_4").unwrap();
    let gains = DesignOptions {
        gains: ["0", "0", "1", "1", "1", "1", "1"].map(e).to_vec(),
        ..DesignOptions::default()
    };
    let law = synthesize(&sys, &kappa, &stab, &gains).unwrap();
    c.check(
        format!("mixed v1 = {} (reference -eta)", law.v[0]),
        same(&law.v[0], &e("-eta")),
    );
    let beta = "(3*eta + 2*xi1_1 + 2*xi2_1 + 2*xi2_2 - eta*xi3_2)";
    let phi22 = e(&law.ledger.iter().find(|r| r.var == "xi2_2").unwrap().target);
    c.check(
        format!("mixed beta = xi2_2 - phi22 (phi22 = {phi22})"),
        same(&(e("xi2_2") - phi22), &e(beta)),
    );
    let v = e("(eta^2 + xi1_1^2 + xi3_1^2 + xi3_2^2 + (xi2_1 + 2*eta)^2 + B^2 + (xi3_3 + xi3_1 + xi3_2)^2 + (xi3_4 + B)^2)/2")
        .subs_var("B", &e(beta));
    let vdot = e(
        "-eta^2 - xi3_2^2 - (xi2_1 + 2*eta)^2 - B^2 - (xi3_3 + xi3_1 + xi3_2)^2 - (xi3_4 + B)^2",
    )
    .subs_var("B", &e(beta));
    c.check("mixed V matches reference", same(&law.w, &v));
    c.check(
        "mixed V' matches reference",
        same(&rate(&sys, &law.v, &law.w), &vdot),
    );

    let cl = ClosedLoop::from_law(&sys, &law, &BTreeMap::new()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = f64::NEG_INFINITY;
    let mut all = true;
    for _ in 0..50 {
        let x0: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let tr = simulate(&cl, &x0, &[], &SimConfig::new(1e-3, 10.0)).unwrap();
        let m = lyapunov_monitor(&tr, &law.w).unwrap();
        worst = worst.max(m.max_increase);
        all &= m.pass && !tr.diverged;
    }
    c.check(
        format!(
            "mixed: simulated W nonincreasing from 50 seeded x0 (largest increment {worst:.3e})"
        ),
        all,
    );
    c
}

fn semi_global() -> Checks {
    let mut c = Checks::default();
    let (sys, stab) = chains("semi");
    let kappa = Order::parse("xi1_1 xi1_2 xi2_1 xi2_2 xi2_3").unwrap();
    let law = semi_global_synthesize(
        &sys,
        &[3, 2],
        &kappa,
        &stab,
        0.5,
        None,
        &DesignOptions::default(),
    )
    .unwrap();
    let v1 = "(-eps^2*xi1_1 - 2*eps*xi1_2)";
    let xi23 = e("-(eps+1)*xi2_1 - (eps+1)*xi2_2 - eta*(sin(eta) - eps^2*xi1_1 - 2*eps*xi1_2)");
    let got = law
        .ledger
        .iter()
        .find(|r| r.var == "xi2_2")
        .map(|r| e(&r.law));
    c.check(
        "xi2_3* matches reference",
        got.is_some_and(|g| same(&g, &xi23)),
    );
    let v2 = "-(2*eps+1)*xi2_1 - (2*eps+3)*xi2_2 - (eps+2)*xi2_3 - eta*(sin(eta) + 2*V1 - eps*V1 - eps^2*xi1_2) \
              - (-eta + (V1 + xi2_2)*sin(eta))*(sin(eta) + eta*cos(eta) + V1)";
    c.check(
        "v2 matches reference",
        same(&law.v[1], &e(&v2.replace("V1", v1))),
    );

    let run = |eps: f64, x0: &[f64]| -> (Trace, f64) {
        let design = semi_global_synthesize(
            &sys,
            &[3, 2],
            &kappa,
            &stab,
            eps,
            None,
            &DesignOptions::default(),
        );
        let law = design.unwrap_or_else(|_| law.clone());
        let cl =
            ClosedLoop::from_law(&sys, &law, &BTreeMap::from([(EPS.to_string(), eps)])).unwrap();
        let t = Instant::now();
        let tr = simulate(&cl, x0, &[], &SimConfig::new(1e-3, 100.0)).unwrap();
        (tr, t.elapsed().as_secs_f64())
    };
    let small = [5.0, 0.5, 0.5, 0.5, 5.0, 5.0];
    let (tr, secs) = run(0.5, &small);
    c.check(
        format!(
            "eps = 0.5 from (5,0.5,0.5,0.5,5,5): |x(100)| = {:.3e}, {secs:.2} s",
            tr.final_norm()
        ),
        !tr.diverged && tr.final_norm() <= 1e-3 && secs < 5.0,
    );
    let large = [-20.0, -2.0, -2.0, -2.0, -20.0, -20.0];
    let (tr, secs) = run(0.15, &large);
    c.check(
        format!(
            "eps = 0.15 from (-20,-2,-2,-2,-20,-20): |x(100)| = {:.3e}, {secs:.2} s",
            tr.final_norm()
        ),
        !tr.diverged && tr.final_norm() <= 1e-3 && secs < 5.0,
    );
    let (tr, _) = run(0.5, &large);
    c.note(format!(
        "eps = 0.5 from the large initial state {} (|x| = {:.3e} at t = {:.2})",
        if tr.diverged {
            "diverges"
        } else if tr.final_norm() > 1e-3 {
            "does not converge"
        } else {
            "converges"
        },
        tr.final_norm(),
        tr.t.last().unwrap()
    ));
    c
}

fn attenuation() -> Checks {
    let mut c = Checks::default();
    let (sys, stab) = chains("add_exam");
    let kappa = Order::parse("xi2_1 xi1_1 xi2_2").unwrap();
    let gains = DesignOptions {
        gains: ["1", "1/3", "1"].map(e).to_vec(),
        ..DesignOptions::default()
    };
    let law = da_synthesize(&sys, &kappa, &stab, Budget::EqualSplit(3), &gains).unwrap();
    let phi22 = e("-z - xi2_1 - 3/(4*gamma^2)*xi2_1*(1 + z^2)");
    c.check(
        "phi22 matches reference",
        same(&e(&law.ledger[0].law), &phi22),
    );
    let reference_v1 = e("-11/3*z - 4/3*xi1_1 - xi2_1 - 3/(4*gamma^2)*(xi1_1 + 2*z)*(1 + xi2_1^2)");
    c.check(
        format!("v1 matches reference (generated {})", law.v[0]),
        same(&law.v[0], &reference_v1),
    );

    let gamma = stab.gamma.unwrap_or(1.0);
    let cl =
        ClosedLoop::from_law(&sys, &law, &BTreeMap::from([(GAMMA.to_string(), gamma)])).unwrap();
    let cfg = SimConfig::new(1e-4, 10.0);
    let tr = simulate(&cl, &[0.0; 4], &[Signal::pulse(2.0)], &cfg).unwrap();
    let l2 = l2_gain_check(&tr, gamma, 0.0);
    c.check(
        format!(
            "x0 = 0, w = pulse(2): int y^2 = {:.4e} <= {:.4e}",
            l2.lhs, l2.rhs
        ),
        l2.pass,
    );
    let x0 = [1.0; 4];
    let v0 = cl.storage_at(&x0).unwrap();
    let tr = simulate(
        &cl,
        &x0,
        &[Signal::Step {
            until: 2.0,
            scale: 10.0,
        }],
        &cfg,
    )
    .unwrap();
    let l2 = l2_gain_check(&tr, gamma, v0);
    c.check(
        format!(
            "x0 = (1,1,1,1), w = 10 pulse(2): int y^2 = {:.4e} <= {:.4e} (V3(x0) = {v0:.4})",
            l2.lhs, l2.rhs
        ),
        l2.pass,
    );
    c
}

fn numeric_foundations() -> Checks {
    let mut c = Checks::default();
    let vars = nlstruct_verify::vars3();
    let mut runner = TestRunner::deterministic();
    let strategy = nlstruct_verify::smooth_expr();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = strategy.new_tree(&mut runner).unwrap().current();
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (i, v) in vars.iter().enumerate() {
            let d = diff(&f, v).eval(&vars, &x).unwrap();
            let h = 1e-6;
            let (mut lo, mut hi) = (x.clone(), x.clone());
            lo[i] -= h;
            hi[i] += h;
            let fd = (f.eval(&vars, &hi).unwrap() - f.eval(&vars, &lo).unwrap()) / (2.0 * h);
            worst = worst.max((d - fd).abs() / (1.0 + d.abs()));
        }
    }
    c.check(
        format!("finite-difference Jacobian on 50 expressions: worst relative error {worst:.2e}"),
        worst <= 1e-5,
    );

    let decay = ClosedLoop::new(vec![Sym::from("x")], vec![], &[e("-x")], &[], &[], None).unwrap();
    let err = |dt: f64| {
        let tr = simulate(&decay, &[1.0], &[], &SimConfig::new(dt, 1.0)).unwrap();
        (tr.final_state()[0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    c.check(
        format!("RK4 order factor {ratio:.3}"),
        (12.0..=20.0).contains(&ratio),
    );

    let mut ok = true;
    for trial in 0..20 {
        let (m, n) = (rng.gen_range(2..7), rng.gen_range(2..7));
        let r = rng.gen_range(0..=m.min(n));
        let low = DMatrix::from_fn(m, r, |_, _| rng.gen_range(-1.0..1.0))
            * DMatrix::from_fn(r, n, |_, _| rng.gen_range(-1.0..1.0));
        let p = invertible(&mut rng, m);
        let q = invertible(&mut rng, n);
        let moved = &p * &low * &q;
        ok &= c.check(
            format!(
                "rank trial {trial}: {} -> {}",
                rank(&low, 1e-9),
                rank(&moved, 1e-9)
            ),
            rank(&moved, 1e-9) == r && rank(&low, 1e-9) == r,
        );
    }
    c.0.retain(|(name, pass)| !name.starts_with("rank trial") || !pass);
    c.check("rank invariant under 20 random invertible multipliers", ok);
    c
}

fn invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        if m.clone().svd(false, false).singular_values.min() > 0.2 {
            return m;
        }
    }
}

fn monte_carlo() -> Checks {
    let mut c = Checks::default();
    let (sys, stab) = chains("vrd22");
    let dist = ChainSystem::load(path("vrd22_dist.chains")).unwrap();
    let opts = DesignOptions::default();
    let spec = BatchSpec {
        runs: 1000,
        seed: 42,
        cfg: SimConfig::new(1e-3, 10.0),
        stride: 500,
        ..BatchSpec::default()
    };
    let mut medians = Vec::new();
    for (name, kappa) in [
        ("chain-by-chain", Order::chain_by_chain(&sys.q)),
        ("level-by-level", Order::level_by_level(&sys.q)),
    ] {
        let law = synthesize(&sys, &kappa, &stab, &opts).unwrap();
        let cl = ClosedLoop::from_law(&sys, &law, &BTreeMap::new()).unwrap();
        let a = run_batch(&cl, &spec).unwrap();
        let b = run_batch(&cl, &spec).unwrap();
        c.check(
            format!("{name}: batch is deterministic under the master seed"),
            a == b,
        );
        let peak_u = a.envelope.u_abs_max.iter().cloned().fold(0.0, f64::max);
        c.note(format!(
            "{name}: median |x(10)| = {:.3e}, diverged {}, peak |u| = {peak_u:.3}, envelope rows {}",
            a.median_endpoint,
            a.diverged,
            a.envelope.t.len()
        ));
        let dcl = ClosedLoop::from_law(&dist, &law, &BTreeMap::new()).unwrap();
        let d = run_batch(
            &dcl,
            &BatchSpec {
                noise: Some((0.0, 1.0)),
                ..spec.clone()
            },
        )
        .unwrap();
        let spread: f64 = (0..5)
            .map(|i| d.envelope.x_max.last().unwrap()[i] - d.envelope.x_min.last().unwrap()[i])
            .sum();
        c.note(format!(
            "{name} with disturbance: median |x(10)| = {:.3e}, final envelope width {spread:.3e}",
            d.median_endpoint
        ));
        medians.push(a.median_endpoint);
    }
    c.check(
        format!(
            "median endpoint level-by-level {:.3e} <= chain-by-chain {:.3e}",
            medians[1], medians[0]
        ),
        medians[1] <= medians[0],
    );
    c
}

fn main() {
    let criteria: [(usize, &str, bool, fn() -> Checks); 8] = [
        (1, "structure algorithm regression", true, structure),
        (2, "linear fixtures", true, linear),
        (3, "invariance property suite", true, invariance),
        (4, "backstepping formula reproduction", true, backstepping),
        (5, "semi-global example", true, semi_global),
        (6, "disturbance attenuation example", true, attenuation),
        (7, "numeric foundations", true, numeric_foundations),
        (
            8,
            "Monte Carlo protocol (observational)",
            false,
            monte_carlo,
        ),
    ];
    let mut gating_failures = 0;
    for (n, name, gating, run) in criteria {
        let t = Instant::now();
        let checks = run();
        let verdict = if checks.pass() { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} {verdict}: {name} ({:.1} s)",
            t.elapsed().as_secs_f64()
        );
        for (what, ok) in &checks.0 {
            println!("    {} {what}", if *ok { "ok  " } else { "FAIL" });
        }
        for note in &checks.1 {
            println!("    note {note}");
        }
        if gating && !checks.pass() {
            gating_failures += 1;
        }
    }
    if gating_failures > 0 {
        println!("{gating_failures} gating criteria failed");
        std::process::exit(1);
    }
}
