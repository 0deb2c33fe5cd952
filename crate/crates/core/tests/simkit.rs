use std::collections::BTreeMap;

use nlstruct::backstep::*;
use nlstruct::simkit::*;
use nlstruct::symcore::{parse, Expr, Sym};
use proptest::prelude::*;

fn model(name: &str) -> String {
    format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn syms(names: &[&str]) -> Vec<Sym> {
    names.iter().map(|s| Sym::from(*s)).collect()
}

/// `ẋ = −x` with `y = x` and `V = x²`.
fn decay() -> ClosedLoop {
    ClosedLoop::new(
        syms(&["x"]),
        vec![],
        &[e("-x")],
        &[e("-x")],
        &[e("x")],
        Some(&e("x^2")),
    )
    .unwrap()
}

fn vrd22() -> (ChainSystem, ControlLaw) {
    let sys = ChainSystem::load(model("vrd22.chains")).unwrap();
    let stab = Stabilizer::load(model("vrd22.stab")).unwrap();
    let law = synthesize(
        &sys,
        &Order::chain_by_chain(&sys.q),
        &stab,
        &DesignOptions::default(),
    )
    .unwrap();
    (sys, law)
}

#[test]
fn rk4_is_fourth_order() {
    let cl = decay();
    let err = |dt: f64| {
        let tr = simulate(&cl, &[1.0], &[], &SimConfig::new(dt, 1.0)).unwrap();
        (tr.final_state()[0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    let euler = |dt: f64| {
        let cfg = SimConfig {
            method: Method::Euler,
            ..SimConfig::new(dt, 1.0)
        };
        (simulate(&cl, &[1.0], &[], &cfg).unwrap().final_state()[0] - (-1.0f64).exp()).abs()
    };
    let r = euler(0.01) / euler(0.005);
    assert!((1.8..=2.2).contains(&r), "euler ratio {r}");
}

#[test]
fn origin_is_an_equilibrium() {
    let (sys, law) = vrd22();
    let cl = ClosedLoop::from_law(&sys, &law, &BTreeMap::new()).unwrap();
    let tr = simulate(&cl, &[0.0; 5], &[], &SimConfig::new(1e-2, 2.0)).unwrap();
    assert!(tr
        .x
        .iter()
        .flatten()
        .chain(tr.u.iter().flatten())
        .all(|&v| v == 0.0));
    assert_eq!(tr.len(), 201);
}

#[test]
fn storage_decays_at_the_designed_rate() {
    let (sys, law) = vrd22();
    let cl = ClosedLoop::from_law(&sys, &law, &BTreeMap::new()).unwrap();
    let x0 = [0.5, -0.3, 0.2, 0.1, -0.4];
    let tr = simulate(&cl, &x0, &[], &SimConfig::new(1e-3, 3.0)).unwrap();
    let v = tr.v.as_ref().unwrap();
    for (t, vk) in tr.t.iter().zip(v).step_by(100) {
        let expect = v[0] * (-2.0 * t).exp();
        assert!(
            (vk - expect).abs() <= 1e-6 * expect,
            "t = {t}: {vk} vs {expect}"
        );
    }
    assert!(lyapunov_monitor(&tr, &law.w).unwrap().pass);
}

#[test]
fn monitor_flags_growth() {
    let grow = ClosedLoop::new(syms(&["x"]), vec![], &[e("x")], &[], &[], None).unwrap();
    let tr = simulate(&grow, &[1.0], &[], &SimConfig::new(1e-2, 1.0)).unwrap();
    let m = lyapunov_monitor(&tr, &e("x^2")).unwrap();
    assert!(!m.pass && m.max_increase > 0.0);
    let tr = simulate(&decay(), &[1.0], &[], &SimConfig::new(1e-2, 1.0)).unwrap();
    assert!(lyapunov_monitor(&tr, &e("x^2")).unwrap().pass);
    assert!(matches!(lyapunov_monitor(&tr, &e("x*z")), Err(SimError::Unbound(s)) if s == "z"));
}

#[test]
fn divergence_stops_the_run() {
    let blow = ClosedLoop::new(syms(&["x"]), vec![], &[e("x^3")], &[], &[], None).unwrap();
    let tr = simulate(&blow, &[2.0], &[], &SimConfig::new(1e-3, 5.0)).unwrap();
    assert!(tr.diverged && tr.len() < 5001);
}

#[test]
fn l2_gain_of_filtered_disturbance() {
    // ẋ = −x + w, y = x has gain 1 and storage x²: ∫y² ≤ ∫w² + x0².
    let cl = ClosedLoop::new(
        syms(&["x"]),
        syms(&["w"]),
        &[e("-x + w")],
        &[],
        &[e("x")],
        Some(&e("x^2")),
    )
    .unwrap();
    let tr = simulate(
        &cl,
        &[0.5],
        &[Signal::pulse(2.0)],
        &SimConfig::new(1e-3, 6.0),
    )
    .unwrap();
    let c = l2_gain_check(&tr, 1.0, 0.25);
    assert!(c.pass && c.lhs > 0.0 && c.lhs < c.rhs, "{c:?}");
    assert!(!l2_gain_check(&tr, 0.1, 0.0).pass);
}

#[test]
fn csv_layout() {
    let tr = simulate(&decay(), &[1.0], &[], &SimConfig::new(0.5, 1.0)).unwrap();
    let csv = tr.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x,u1,y1,V,intY2,intW2");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,1,-1,1,1,0,0"));
}

#[test]
fn unbound_parameters_are_reported() {
    let sys = ChainSystem::load(model("semi.chains")).unwrap();
    let law = vec![e("-xi1_1*k"), e("-xi2_1")];
    let err = ClosedLoop::from_chain(&sys, &law, None, &BTreeMap::new()).unwrap_err();
    assert_eq!(err, SimError::Unbound("k".into()));
    let ok = ClosedLoop::from_chain(&sys, &law, None, &BTreeMap::from([("k".to_string(), 2.0)]));
    assert!(ok.is_ok());
}

#[test]
fn batch_is_deterministic() {
    let (sys, law) = vrd22();
    let cl = ClosedLoop::from_law(&sys, &law, &BTreeMap::new()).unwrap();
    let spec = BatchSpec {
        runs: 16,
        cfg: SimConfig::new(1e-2, 10.0),
        stride: 100,
        ..BatchSpec::default()
    };
    let a = run_batch(&cl, &spec).unwrap();
    let b = run_batch(&cl, &spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.diverged, 0);
    assert!(a.median_endpoint < 1e-2);
    assert_eq!(a.envelope.t.len(), 11);
    for k in 0..a.envelope.t.len() {
        for i in 0..5 {
            assert!(a.envelope.x_min[k][i] <= a.envelope.x_max[k][i]);
        }
    }
    let other = run_batch(&cl, &BatchSpec { seed: 7, ..spec }).unwrap();
    assert_ne!(a.runs[0].x0, other.runs[0].x0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integrals_are_nondecreasing(seed in any::<u64>(), x0 in -2.0f64..2.0) {
        let cl = ClosedLoop::new(syms(&["x"]), syms(&["w"]), &[e("-x + w")], &[], &[e("x")], None).unwrap();
        let w = Signal::Noise { seed, lo: -1.0, hi: 1.0, segment: 0.05 };
        let tr = simulate(&cl, &[x0], std::slice::from_ref(&w), &SimConfig::new(1e-2, 2.0)).unwrap();
        prop_assert!(tr.int_y2.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(tr.int_w2.windows(2).all(|p| p[1] >= p[0]));
        let again = simulate(&cl, &[x0], &[w], &SimConfig::new(1e-2, 2.0)).unwrap();
        prop_assert_eq!(tr, again);
    }
}
