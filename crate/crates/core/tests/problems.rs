mod common;

use gstiefel_core::problems::*;
use gstiefel_core::solver::Problem;
use gstiefel_core::{Mat, Retraction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest relative mismatch between `⟨grad f, ξ⟩` and the central
/// difference of `f ∘ R` over `trials` random unit directions.
fn directional_derivative_error<P: Problem>(prob: &P, ps: &[usize], seed: u64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let man = prob.manifold();
    let x = man.random_point(ps, &mut rng).unwrap();
    let g = prob.riemannian_gradient(&x).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let xi = man.random_tangent(&x, &mut rng).unwrap();
        let fp = prob.objective(&man.retract(&x, &xi, h, Retraction::default()).unwrap());
        let fm = prob.objective(&man.retract(&x, &xi, -h, Retraction::default()).unwrap());
        let fd = (fp - fm) / (2.0 * h);
        let exact = g.inner(&xi);
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-3 * g.norm()));
    }
    worst
}

#[test]
fn gevp_gradient_matches_finite_differences() {
    for kind in [GevpKind::DiagA, GevpKind::RandomA] {
        let inst = generate_gevp_instance(kind, 30, 4, 7).unwrap();
        let err = directional_derivative_error(&gevp_problem(&inst), &[4], 1, 10);
        assert!(err < 1e-5, "{kind:?}: {err:e}");
    }
}

#[test]
fn gevp_euclidean_gradient_matches_finite_differences() {
    let inst = generate_gevp_instance(GevpKind::RandomA, 30, 3, 2).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = prob.manifold().random_point(&[3], &mut rng).unwrap();
    let eg = &prob.euclidean_gradient(&x)[0];
    let dir = gstiefel_core::manifold::gaussian(30, 3, &mut rng);
    let f = |a: &Mat| -a.dot(&(inst.a() * a));
    let h = 1e-5;
    let fd = (f(&(x.parts()[0].matrix() + &dir * h)) - f(&(x.parts()[0].matrix() - &dir * h))) / (2.0 * h);
    let exact = eg.dot(&dir);
    assert!((fd - exact).abs() / exact.abs() < 1e-6);
}

#[test]
fn cca_gradient_matches_finite_differences() {
    let inst = generate_cca_instance(20, 15, 3, 200, 4, None).unwrap();
    let err = directional_derivative_error(&cca_problem(&inst), &[3, 3], 9, 10);
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn objective_change_agrees_with_plain_difference() {
    let inst = generate_cca_instance(20, 15, 3, 200, 4, None).unwrap();
    let prob = cca_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let man = prob.manifold();
    let x = man.random_point(&[3, 3], &mut rng).unwrap();
    let y = man.random_point(&[3, 3], &mut rng).unwrap();
    let plain = prob.objective(&y) - prob.objective(&x);
    assert!((prob.objective_change(&x, &y) - plain).abs() < 1e-12);

    let inst = generate_gevp_instance(GevpKind::RandomA, 25, 2, 3).unwrap();
    let prob = gevp_problem(&inst);
    let x = prob.manifold().random_point(&[2], &mut rng).unwrap();
    let y = prob.manifold().random_point(&[2], &mut rng).unwrap();
    let plain = prob.objective(&y) - prob.objective(&x);
    assert!((prob.objective_change(&x, &y) - plain).abs() < 1e-10 * plain.abs().max(1.0));
}

#[test]
fn gevp_oracle_is_a_lower_bound() {
    let inst = generate_gevp_instance(GevpKind::RandomA, 50, 5, 12).unwrap();
    let prob = gevp_problem(&inst);
    let oracle = gevp_oracle(&inst).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let x = prob.manifold().random_point(&[5], &mut rng).unwrap();
        assert!(oracle <= prob.objective(&x) + 1e-9);
    }
}

#[test]
fn cca_oracle_is_a_lower_bound() {
    let inst = generate_cca_instance(30, 20, 4, 300, 5, None).unwrap();
    let prob = cca_problem(&inst);
    let oracle = cca_oracle(&inst).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let x = prob.manifold().random_point(&[4, 4], &mut rng).unwrap();
        assert!(oracle <= prob.objective(&x) + 1e-9);
    }
}

#[test]
fn single_pair_cca_is_the_scaled_first_canonical_correlation() {
    let inst = generate_cca_instance(12, 8, 1, 200, 3, Some(vec![1.7])).unwrap();
    // first canonical correlation from the symmetric-definite eigenproblem
    // Cx⁻¹ Cxy Cy⁻¹ Cyx u = ρ² u
    let cx_inv = inst.cx().clone().try_inverse().unwrap();
    let cy_inv = inst.cy().clone().try_inverse().unwrap();
    let k = &cx_inv * inst.cxy() * &cy_inv * inst.cxy().transpose();
    let rho2 = k
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((cca_oracle(&inst).unwrap() + 1.7 * rho2.sqrt()).abs() < 1e-10);
}

#[test]
fn weights_are_validated() {
    let eye = |n| Mat::identity(n, n);
    assert!(CcaInstance::new(eye(3), eye(2), Mat::zeros(3, 2), vec![1.0, 1.0]).is_err());
    assert!(CcaInstance::new(eye(3), eye(2), Mat::zeros(3, 2), vec![1.0, -0.5]).is_err());
    assert!(CcaInstance::new(eye(3), eye(2), Mat::zeros(3, 2), vec![2.0, 1.0]).is_ok());
}
