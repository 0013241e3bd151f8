use carnot::linalg::det;
use carnot::{verify_structure, Algebra, AlgebraError, AlgebraF32, GroupPoint, StratifiedAlgebra, TangentVector};
use proptest::prelude::*;

fn presets() -> Vec<Algebra> {
    ["h1", "h2", "h3", "engel"].iter().map(|n| StratifiedAlgebra::preset(n).unwrap()).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

#[test]
fn worked_group_laws() {
    let h1 = StratifiedAlgebra::<f64>::heisenberg(1);
    assert_eq!(h1.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![1.0, 1.0, 0.5]);
    let engel = StratifiedAlgebra::<f64>::engel();
    assert_eq!(engel.mul(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]), vec![1.0, 1.0, 0.5, 0.0]);
    assert_eq!(h1.dilate_coords(2.0, &[1.0, 1.0, 1.0]), vec![2.0, 2.0, 4.0]);
    assert_eq!(engel.dilate_coords(3.0, &[1.0; 4]), vec![3.0, 3.0, 9.0, 27.0]);
    assert!(matches!(h1.dilate(0.0, &GroupPoint::identity(3)), Err(AlgebraError::Domain(_))));
}

#[test]
fn homogeneous_dimensions() {
    let h1 = verify_structure(StratifiedAlgebra::<f64>::heisenberg(1).table());
    assert!(h1.passed());
    assert_eq!(h1.homogeneous_dimension, 4);
    let e = verify_structure(StratifiedAlgebra::<f64>::engel().table());
    assert!(e.passed());
    assert_eq!(e.homogeneous_dimension, 7);
}

#[test]
fn brackets_reproduce_constants() {
    for alg in presets() {
        let n = alg.n();
        let base = GroupPoint::new((0..n).map(|i| 0.1 * i as f64).collect());
        for i in 0..n {
            for j in 0..n {
                let e = |k: usize| TangentVector {
                    frame_coords: (0..n).map(|m| if m == k { 1.0 } else { 0.0 }).collect(),
                    base: base.clone(),
                };
                let b = alg.bracket(&e(i), &e(j)).unwrap();
                for r in 0..n {
                    assert_eq!(b.frame_coords[r], alg.constant(r, i, j));
                }
            }
        }
    }
    let h1 = StratifiedAlgebra::<f64>::heisenberg(1);
    let v = TangentVector { frame_coords: vec![0.3, -1.0, 2.0], base: GroupPoint::identity(3) };
    let w = TangentVector { frame_coords: vec![0.3, -1.0, 2.0], base: GroupPoint::new(vec![1.0, 0.0, 0.0]) };
    assert!(matches!(h1.bracket(&v, &w), Err(AlgebraError::BaseMismatch)));
}

#[test]
fn single_precision_core() {
    let h1 = AlgebraF32::heisenberg(1);
    let p = h1.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
    assert_eq!(p, vec![1.0f32, 1.0, 0.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn associativity_and_inverse(alg_idx in 0usize..4, seed in coords(21)) {
        let alg = &presets()[alg_idx];
        let n = alg.n();
        let (a, b, c) = (&seed[..n], &seed[7..7 + n], &seed[14..14 + n]);
        let left = alg.mul(&alg.mul(a, b), c);
        let right = alg.mul(a, &alg.mul(b, c));
        prop_assert!(close(&left, &right, 1e-10), "{left:?} vs {right:?}");
        let inv: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert!(close(&alg.mul(a, &inv), &vec![0.0; n], 1e-12));
    }

    #[test]
    fn dilation_is_automorphism(alg_idx in 0usize..4, seed in coords(14), t in 0.1..10.0f64, s in 0.1..10.0f64) {
        let alg = &presets()[alg_idx];
        let n = alg.n();
        let (a, b) = (&seed[..n], &seed[7..7 + n]);
        let lhs = alg.dilate_coords(t, &alg.mul(a, b));
        let rhs = alg.mul(&alg.dilate_coords(t, a), &alg.dilate_coords(t, b));
        let scale = lhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(close(&lhs, &rhs, 1e-10 * scale));
        let ts = alg.dilate_coords(t, &alg.dilate_coords(s, a));
        prop_assert!(close(&ts, &alg.dilate_coords(t * s, a), 1e-10 * scale.max(1.0)));
    }

    #[test]
    fn frame_matches_differences_and_is_unimodular(alg_idx in 0usize..4, x in coords(7)) {
        let alg = &presets()[alg_idx];
        let n = alg.n();
        let x = &x[..n];
        let m = alg.frame_matrix(x);
        prop_assert!((det(&m) - 1.0).abs() < 1e-12);
        let h = 1e-5;
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = h;
            let p = alg.mul(x, &e);
            e[col] = -h;
            let q = alg.mul(x, &e);
            for row in 0..n {
                let fd = (p[row] - q[row]) / (2.0 * h);
                prop_assert!((fd - m[row][col]).abs() < 1e-8, "{row},{col}: {fd} vs {}", m[row][col]);
            }
        }
    }

    #[test]
    fn bracket_is_skew(alg_idx in 0usize..4, v in coords(7), w in coords(7)) {
        let alg = &presets()[alg_idx];
        let n = alg.n();
        let tv = |c: &[f64]| TangentVector { frame_coords: c[..n].to_vec(), base: GroupPoint::identity(n) };
        let vw = alg.bracket(&tv(&v), &tv(&w)).unwrap();
        let wv = alg.bracket(&tv(&w), &tv(&v)).unwrap();
        prop_assert!(vw.frame_coords.iter().zip(&wv.frame_coords).all(|(a, b)| (a + b).abs() < 1e-14));
        prop_assert!(alg.bracket(&tv(&v), &tv(&v)).unwrap().frame_coords.iter().all(|c| c.abs() < 1e-14));
    }
}
