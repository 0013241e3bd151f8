use std::sync::Arc;

use carnot::metrics::{layer_constants, layer_constants_with, metric_factor_bounds, metric_factor_bounds_with, LAYER_MARGIN};
use carnot::{GroupPoint, MetricError, Norm, NormKind, StratifiedAlgebra};
use proptest::prelude::*;

fn norms() -> Vec<Norm> {
    let h1 = Arc::new(StratifiedAlgebra::heisenberg(1));
    let h2 = Arc::new(StratifiedAlgebra::heisenberg(2));
    let engel = Arc::new(StratifiedAlgebra::engel());
    vec![
        Norm::new(NormKind::Korany, h1.clone()).unwrap(),
        Norm::new(NormKind::PowerLambda(4), h1).unwrap(),
        Norm::new(NormKind::Korany, h2).unwrap(),
        Norm::new(NormKind::PowerLambda(12), engel).unwrap(),
    ]
}

#[test]
fn korany_examples() {
    let rho = &norms()[0];
    assert_eq!(rho.eval(&[1.0, 0.0, 0.0]), 1.0);
    assert!((rho.eval(&[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
    let g = rho.norm_gradient(&GroupPoint::new(vec![1.0, 0.0, 0.0])).unwrap();
    assert!((g.frame_coords[0] - 1.0).abs() < 1e-14 && g.frame_coords[1].abs() < 1e-14);
    assert_eq!(rho.norm_gradient(&GroupPoint::identity(3)).unwrap_err(), MetricError::Singular);
}

#[test]
fn unsupported_norms_are_refused() {
    let engel = Arc::new(StratifiedAlgebra::engel());
    assert!(matches!(Norm::new(NormKind::Korany, engel.clone()), Err(MetricError::Config(_))));
    assert!(matches!(Norm::new(NormKind::PowerLambda(8), engel), Err(MetricError::Config(_))));
}

#[test]
fn layer_constant_certificates_survive_resampling() {
    for rho in norms() {
        let c = layer_constants(&rho);
        let dense = layer_constants_with(&rho, 40_000);
        for (a, b) in c.c.iter().zip(&dense.c) {
            assert!(*b <= *a * (1.0 + 1e-12) * LAYER_MARGIN.max(1.0), "{a} vs {b}");
            // The margin is never consumed by resampling.
            assert!(b / LAYER_MARGIN <= *a);
        }
    }
}

#[test]
fn factor_bounds_are_stable_and_sandwich_the_plane_density() {
    for rho in norms() {
        let b = metric_factor_bounds(&rho);
        let fine = metric_factor_bounds_with(&rho, 40_000);
        assert!(0.0 < b.k1 && b.k1 <= b.k2);
        assert!((b.k1 - fine.k1).abs() <= 0.02 * b.k1);
        assert!((b.k2 - fine.k2).abs() <= 0.02 * b.k2);
    }
    let b = metric_factor_bounds(&norms()[0]);
    assert!(b.k1 <= 0.874_02 && 0.874_02 <= b.k2);
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn homogeneity_and_symmetry(idx in 0usize..4, x in point(7), t in 0.1..10.0f64) {
        let rho = &norms()[idx];
        let alg = rho.algebra();
        let x = &x[..alg.n()];
        let r = rho.eval(x);
        prop_assert!((rho.eval(&alg.dilate_coords(t, x)) - t * r).abs() < 1e-12 * (1.0 + t * r));
        let inv: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(rho.eval(&inv), r);
        let xh = x[alg.layer(1)].iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(xh <= r * (1.0 + 1e-12));
    }

    #[test]
    fn gradient_scaling(idx in 0usize..4, x in point(7), t in 0.2..5.0f64) {
        let rho = &norms()[idx];
        let alg = rho.algebra();
        let x = &x[..alg.n()];
        prop_assume!(rho.eval(x) > 0.1);
        let g = rho.grad_frame(x).unwrap();
        let gt = rho.grad_frame(&alg.dilate_coords(t, x)).unwrap();
        for i in 0..alg.n() {
            let expect = t.powi(1 - alg.ord(i) as i32) * g[i];
            prop_assert!((gt[i] - expect).abs() < 1e-5 * (1.0 + expect.abs()), "{i}: {} vs {expect}", gt[i]);
        }
        if rho.kind() == NormKind::Korany {
            let gh = g[alg.layer(1)].iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(gh <= 1.0 + 1e-12);
            let fd = rho.grad_frame_fd(x);
            prop_assert!(g.iter().zip(&fd).all(|(a, b)| (a - b).abs() < 1e-6));
        }
    }
}
