use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlstruct::linstruct::*;
use nlstruct::structalgo::{infinite_zero_algorithm, Invertibility, StructConfig};

fn fixture(name: &str) -> LinearTriple {
    LinearTriple::load(
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../models")
            .join(name),
    )
    .unwrap()
}

#[test]
fn files_match_builtin_fixtures() {
    assert_eq!(fixture("counter3.lin"), LinearTriple::counter3(1.0));
    assert_eq!(fixture("exam_sch.lin"), LinearTriple::exam_sch());
    assert_eq!(fixture("exam1.lin"), LinearTriple::exam1(1.0));
    assert_eq!(fixture("exam2.lin"), LinearTriple::exam2(1.0));
}

#[test]
fn infinite_zeros_of_fixtures() {
    assert_eq!(
        linear_infinite_zeros(&LinearTriple::counter3(1.0), LIN_TOL),
        (vec![1, 4], Invertibility::Invertible)
    );
    assert_eq!(
        linear_infinite_zeros(&LinearTriple::exam1(1.0), LIN_TOL).0,
        vec![1, 3]
    );
    for alpha in [0.5, 2.0, -3.0] {
        assert_eq!(
            linear_infinite_zeros(&LinearTriple::counter3(alpha), LIN_TOL).0,
            vec![1, 4]
        );
    }
}

#[test]
fn relative_degree_of_exam_sch() {
    let t = LinearTriple::exam_sch();
    assert_eq!(vector_relative_degree(&t, LIN_TOL).unwrap(), None);
    let t_o = DMatrix::from_row_slice(2, 2, &[1., 0., -1., 1.]);
    let r = vector_relative_degree(&t.with_output_transform(&t_o), LIN_TOL).unwrap();
    assert_eq!(r, Some(vec![1, 2]));
    let (q, _) = linear_infinite_zeros(&t.with_output_transform(&t_o), LIN_TOL);
    assert_eq!(q, vec![1, 2]);
    assert!(vector_relative_degree(
        &LinearTriple::new(t.a.clone(), t.b.columns(0, 1).into_owned(), t.c.clone()).unwrap(),
        LIN_TOL
    )
    .is_err());
}

#[test]
fn agrees_with_symbolic_algorithm() {
    for t in [
        LinearTriple::counter3(1.0),
        LinearTriple::exam1(1.0),
        LinearTriple::exam2(1.0),
        LinearTriple::exam_sch(),
    ] {
        let (q, inv) = linear_infinite_zeros(&t, LIN_TOL);
        let out = infinite_zero_algorithm(&t.to_affine(), &StructConfig::default()).unwrap();
        assert_eq!((q, inv), (out.q, out.invertibility));
    }
}

#[test]
fn decompositions_verify() {
    for t in [
        LinearTriple::counter3(1.0),
        LinearTriple::exam1(1.0),
        LinearTriple::exam2(1.0),
        LinearTriple::exam_sch(),
    ] {
        let d = decompose(&t, LIN_TOL);
        assert!(d.pattern_ok(), "{:?}", d.violations);
        assert!(d.sparsity_holds(1e-9));
        assert_eq!(d.co_dim, 0);
        let r = d.reconstruct();
        assert!(
            (r.a - &t.a).norm() < 1e-9 && (r.b - &t.b).norm() < 1e-9 && (r.c - &t.c).norm() < 1e-9
        );
    }
}

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        if m.clone().svd(false, false).singular_values.min() > 0.2 {
            return m;
        }
    }
}

#[test]
fn q_invariant_under_random_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in [
        LinearTriple::counter3(1.0),
        LinearTriple::exam1(1.0),
        LinearTriple::exam2(1.0),
        LinearTriple::exam_sch(),
    ] {
        let (q0, _) = linear_infinite_zeros(&t, LIN_TOL);
        for _ in 0..20 {
            let ts = random_invertible(&mut rng, t.n());
            let ti = random_invertible(&mut rng, t.m());
            let to = random_invertible(&mut rng, t.p());
            let k = DMatrix::from_fn(t.m(), t.n(), |_, _| rng.gen_range(-1.0..1.0));
            let f = DMatrix::from_fn(t.n(), t.p(), |_, _| rng.gen_range(-1.0..1.0));
            let tsi = ts.clone().try_inverse().unwrap();
            let a = &tsi * (&t.a + &t.b * &k + &f * &t.c) * &ts;
            let moved = LinearTriple::new(a, &tsi * &t.b * &ti, &to * &t.c * &ts).unwrap();
            assert_eq!(linear_infinite_zeros(&moved, LIN_TOL).0, q0);
        }
    }
}

#[test]
fn relative_degree_matches_q_when_present() {
    let t = LinearTriple::exam_sch().with_output_transform(&DMatrix::from_row_slice(
        2,
        2,
        &[1., 0., -1., 1.],
    ));
    let mut r = vector_relative_degree(&t, LIN_TOL).unwrap().unwrap();
    r.sort_unstable();
    assert_eq!(r, linear_infinite_zeros(&t, LIN_TOL).0);
}
