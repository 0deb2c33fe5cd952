mod common;

use common::*;
use nlstruct::symcore::{
    diff, is_zero, lie_bracket, lie_derivative, parse, simplify, Expr, Program, VectorField,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_round_trips(e in any_expr()) {
        let text = e.to_string();
        // folded constants such as sqrt(-1/2) have no literal form
        prop_assume!(!text.contains("NaN") && !text.contains("inf"));
        let back = parse(&text).unwrap();
        prop_assert_eq!(back, e, "rendered as {}", text);
    }

    #[test]
    fn simplify_is_idempotent(e in any_expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn diff_is_linear(e1 in smooth_expr(), e2 in smooth_expr(), a in -4i128..4, b in 1i128..4) {
        let (a, b) = (Expr::int(a), Expr::rational(1, b));
        let lhs = diff(&(&a * &e1 + &b * &e2), "x1");
        let rhs = &a * diff(&e1, "x1") + &b * diff(&e2, "x1");
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn diff_matches_finite_differences(e in smooth_expr(), seed in any::<u64>()) {
        let vars = vars3();
        let mut r = rng(seed);
        let x = random_point(&mut r, 3);
        for (i, v) in vars.iter().enumerate() {
            let d = diff(&e, v).eval(&vars, &x).unwrap();
            let fd = central_diff(&e, &vars, &x, i, 1e-6);
            prop_assert!((d - fd).abs() <= 1e-5 * (1.0 + d.abs()), "{e} d/d{v}: {d} vs {fd}");
        }
    }

    #[test]
    fn compiled_matches_tree(e in any_expr(), seed in any::<u64>()) {
        let vars = vars3();
        let x = random_point(&mut rng(seed), 3);
        let t = e.eval(&vars, &x).unwrap();
        let c = Program::compile(std::slice::from_ref(&e), &vars).unwrap().eval(&x)[0];
        prop_assert!(t == c || (t.is_nan() && c.is_nan()) || (t - c).abs() <= 1e-12 * (1.0 + t.abs()));
    }
}

#[test]
fn leibniz_rule() {
    let vars = vars3();
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let f = VectorField::new(random_poly_field(&mut r), vars.clone()).unwrap();
        let lam = random_poly_field(&mut r).remove(0).sin();
        let mu = random_poly_field(&mut r).remove(1);
        let lhs = lie_derivative(&f, &(&lam * &mu));
        let rhs = &lam * lie_derivative(&f, &mu) + &mu * lie_derivative(&f, &lam);
        for _ in 0..20 {
            let x = random_point(&mut r, 3);
            let (a, b) = (lhs.eval(&vars, &x).unwrap(), rhs.eval(&vars, &x).unwrap());
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn bracket_antisymmetry_and_jacobi() {
    let vars = vars3();
    for seed in 0..10u64 {
        let mut r = rng(100 + seed);
        let f = VectorField::new(random_poly_field(&mut r), vars.clone()).unwrap();
        let g = VectorField::new(random_poly_field(&mut r), vars.clone()).unwrap();
        let h = VectorField::new(random_poly_field(&mut r), vars.clone()).unwrap();
        let fg = lie_bracket(&f, &g).unwrap();
        let gf = lie_bracket(&g, &f).unwrap();
        assert!(fg
            .comps
            .iter()
            .zip(&gf.comps)
            .all(|(a, b)| is_zero(&(a + b))));
        assert!(lie_bracket(&f, &f).unwrap().is_zero());

        let t1 = lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap();
        let t2 = lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap();
        let t3 = lie_bracket(&h, &fg).unwrap();
        for _ in 0..20 {
            let x = random_point(&mut r, 3);
            let (a, b, c) = (
                t1.eval(&x).unwrap(),
                t2.eval(&x).unwrap(),
                t3.eval(&x).unwrap(),
            );
            for i in 0..3 {
                assert!(
                    (a[i] + b[i] + c[i]).abs()
                        <= 1e-9 * (1.0 + a[i].abs() + b[i].abs() + c[i].abs())
                );
            }
        }
    }
}
