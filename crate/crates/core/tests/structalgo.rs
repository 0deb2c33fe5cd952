use std::path::PathBuf;

use nlstruct::structalgo::*;
use nlstruct::symcore::{equivalent, parse, SymMatrix};
use nlstruct::sysmodel::{sample_domain, AffineSystem, SamplePlan};

fn model(name: &str) -> AffineSystem {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name);
    AffineSystem::load(p).unwrap()
}

fn e(s: &str) -> nlstruct::symcore::Expr {
    parse(s).unwrap()
}

#[test]
fn ex31_structure() {
    let sys = model("ex31.sys");
    let out = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(out.rho, vec![0, 1, 2]);
    assert_eq!(out.q, vec![2, 3]);
    assert_eq!(out.k_star, 3);
    assert_eq!(out.invertibility, Invertibility::Invertible);
    assert_eq!(out.steps[0].r_rows, Vec::<usize>::new());
    assert_eq!(out.steps[1].r_rows, vec![0]);
    assert_eq!(out.steps[1].s_rows, vec![1]);
    assert!(equivalent(&out.theta(2)[0], &e("x4 - x1*x4")));
    assert!(equivalent(out.steps[1].p.get(0, 0), &e("x4")));

    let nf = build_normal_form(&sys, &out, &NormalFormOptions::default()).unwrap();
    let xi: Vec<_> = nf.xi.iter().flatten().cloned().collect();
    for (a, b) in xi.iter().zip(["x1", "x3", "x2", "x5", "x4 - x1*x4"]) {
        assert!(equivalent(a, &e(b)), "{a} vs {b}");
    }
    assert!(nf.sparsity_holds());
    assert!(equivalent(
        &nf.delta_nf(2, 2, 1).unwrap(),
        &e("xi2_3/(1 - xi1_1)")
    ));
    assert!(equivalent(&nf.delta_nf(2, 1, 1).unwrap(), &e("0")));
    assert!(nf.eta_names.is_empty());
    let pts = sample_domain(&SamplePlan::new(30, 1), &sys).unwrap();
    assert!(check_assumption_b(&sys, &out, &pts, 1e-8).unwrap());
    let _ = check_assumption_d(&sys, &out, &nf, &pts, 1e-6).unwrap();
}

#[test]
fn ex32_structure_and_zero_dynamics() {
    let sys = model("ex32.sys");
    let out = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(out.rho, vec![1, 1, 1]);
    assert_eq!(out.q, vec![1]);
    assert_eq!(out.invertibility, Invertibility::Degenerate);
    assert!(equivalent(out.steps[1].p.get(0, 0), &e("x2")));

    let opts = NormalFormOptions {
        phi_e: Some(vec![e("x1 - x2*x4"), e("x2"), e("x3")]),
        gamma_ie: Some(SymMatrix::from_rows(vec![vec![e("0"), e("exp(-x4)")]], 2)),
    };
    let nf = build_normal_form(&sys, &out, &opts).unwrap();
    assert!(nf.annihilates());
    let zd = zero_dynamics(&nf);
    let split = zd.split.expect("linear (abc) subsystem");
    assert_eq!(split.dims.0, 1);
    assert!((split.a_aa[(0, 0)] + 1.0).abs() < 1e-9);

    let auto = build_normal_form(&sys, &out, &NormalFormOptions::default()).unwrap();
    let s = zero_dynamics(&auto).split.unwrap();
    assert!((s.a_aa[(0, 0)] + 1.0).abs() < 1e-9);

    let pts = sample_domain(&SamplePlan::new(30, 2), &sys).unwrap();
    assert!(check_assumption_c(&sys, &out, None, &pts, 1e-8).unwrap());
}

#[test]
fn ex33_zero_output() {
    let sys = model("ex33.sys");
    let out = zero_output_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(out.rho, vec![1, 2]);
    assert_eq!(out.q, vec![1, 2]);
    assert!(equivalent(out.steps[0].p.get(0, 0), &e("x1")));
    let w = out.steps[0].w.as_ref().unwrap();
    assert!(equivalent(w.get(0, 0), &e("0")));
    assert!(equivalent(w.get(0, 1), &e("x2 - x1^2")));
    assert!(equivalent(&out.theta(1)[0], &e("x4 - x1*x3")));

    let nf = build_normal_form(&sys, &out, &NormalFormOptions::default()).unwrap();
    assert!(equivalent(&nf.phi_e[0], &e("x3")));
    let zd = zero_dynamics(&nf);
    assert!(zd.direct);
    assert!(equivalent(&zd.f0[0], &e("-eta1^3")));
    let pts = sample_domain(&SamplePlan::new(30, 3), &sys).unwrap();
    assert!(!check_assumption_c(&sys, &out, None, &pts, 1e-8).unwrap());
}

#[test]
fn ex34_left_invertible() {
    let sys = model("ex34.sys");
    let out = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(out.invertibility, Invertibility::LeftInvertible);
    assert_eq!(out.q, vec![1, 1]);
    let nf = build_normal_form(&sys, &out, &NormalFormOptions::default()).unwrap();
    let zd = zero_dynamics(&nf);
    assert_eq!(zd.eta.len(), 4);
}

#[test]
fn remark_system() {
    let sys = model("remark.sys");
    let err = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap_err();
    assert!(err.to_string().contains("rank not constant"), "{err}");
    let out = zero_output_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(out.rho, vec![1]);
}

#[test]
fn seed_does_not_change_structure() {
    for name in ["ex31.sys", "ex32.sys", "ex34.sys"] {
        let sys = model(name);
        let a = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
        let cfg = StructConfig {
            plan: SamplePlan::new(120, 9001),
            ..StructConfig::default()
        };
        let b = infinite_zero_algorithm(&sys, &cfg).unwrap();
        assert_eq!((a.rho, a.q, a.invertibility), (b.rho, b.q, b.invertibility));
    }
}

#[test]
fn both_algorithms_agree_when_regular() {
    for name in ["ex31.sys", "ex32.sys", "ex34.sys"] {
        let sys = model(name);
        let a = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
        let b = zero_output_algorithm(&sys, &StructConfig::default()).unwrap();
        assert_eq!((a.rho, a.q), (b.rho, b.q), "{name}");
    }
}

#[test]
fn report_is_deterministic() {
    let sys = model("ex31.sys");
    let a = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
    let b = infinite_zero_algorithm(&sys, &StructConfig::default()).unwrap();
    assert_eq!(render_text(&a), render_text(&b));
    let j = to_json(&a);
    assert_eq!(j["q"], serde_json::json!([2, 3]));
    assert_eq!(j["invertibility"], "Invertible");
}

#[test]
fn q_invariant_under_seeded_transforms() {
    let cfg = StructConfig {
        plan: SamplePlan::new(60, 5),
        ..StructConfig::default()
    };
    let systems = [
        model("ex31.sys"),
        model("ex32.sys"),
        nlstruct::linstruct::LinearTriple::counter3(1.0).to_affine(),
    ];
    for sys in &systems {
        for kind in TransformKind::ALL {
            let variant = if kind == TransformKind::Injection {
                Variant::ZeroOutput
            } else {
                Variant::InfiniteZero
            };
            let rep = invariance_harness(sys, &cfg, variant, kind, 20, 11).unwrap();
            let bad: Vec<_> = rep
                .trials
                .iter()
                .filter(|(_, r)| r.as_ref() != Ok(&rep.base_q))
                .collect();
            assert!(rep.holds(), "{kind:?}: {bad:?}");
        }
    }
}

/// `F_{2,1} = x4` adds `x1·u2` to `ÿ2`: the injected system loses regularity at
/// the origin for the infinite-zero algorithm but not on `h = 0`.
#[test]
fn state_dependent_injection_counterexample() {
    let sys = model("ex31.sys");
    let mut f = SymMatrix::zeros(5, 2);
    f.set(1, 0, e("x4"));
    let moved = apply_transform(&sys, &Transform::Injection(f)).unwrap();
    let err = infinite_zero_algorithm(&moved, &StructConfig::default()).unwrap_err();
    assert!(err.to_string().contains("rank not constant"));
    assert_eq!(
        zero_output_algorithm(&moved, &StructConfig::default())
            .unwrap()
            .q,
        vec![2, 3]
    );
}
