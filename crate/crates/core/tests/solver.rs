use gstiefel_core::problems::*;
use gstiefel_core::solver::{
    beta_mprp, line_search_nonmonotone, solve, IterRecord, Problem, SolveResult, SolverParams, Status, Variant,
};
use gstiefel_core::{Error, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gevp_run(kind: GevpKind, n: usize, p: usize, seed: u64, variant: Variant) -> (SolveResult, f64) {
    let inst = generate_gevp_instance(kind, n, p, seed).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x0 = prob.manifold().random_point(&[p], &mut rng).unwrap();
    let res = solve(&prob, &x0, &variant.params()).unwrap();
    (res, gevp_oracle(&inst).unwrap())
}

/// Offsets are rebuilt from the recorded accurate differences, so values
/// many ulps below `|f|` still compare correctly.
fn window_maxima_strictly_decrease(trace: &[IterRecord], q: usize) -> bool {
    let d: Vec<f64> = trace.iter().map(|r| r.df).collect();
    let n = d.len() + 1;
    let diff = |a: usize, b: usize| -> f64 { d[b..a].iter().sum() };
    (0..)
        .take_while(|j| (j + 2) * q <= n)
        .all(|j| ((j + 1) * q..(j + 2) * q).all(|a| (j * q..(j + 1) * q).any(|b| diff(a, b) < 0.0)))
}

fn check_trace(res: &SolveResult, params: &SolverParams) {
    for r in &res.trace {
        assert!(r.slope < 0.0, "ascent direction at k = {}", r.k);
        assert!(
            r.df <= r.window_slack + params.delta * r.t * r.slope,
            "acceptance fails at k = {}",
            r.k
        );
        assert!(r.feasibility <= 1e-8);
    }
    if res.converged() {
        assert!(window_maxima_strictly_decrease(&res.trace, params.q));
    }
}

#[test]
fn stationary_start_takes_no_iterations() {
    let inst = generate_gevp_instance(GevpKind::DiagA, 15, 3, 1).unwrap();
    let flat = GevpInstance::new(inst.m().clone(), inst.m().clone(), 3).unwrap();
    let prob = gevp_problem(&flat);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x0 = prob.manifold().random_point(&[3], &mut rng).unwrap();
    let res = solve(&prob, &x0, &SolverParams::default()).unwrap();
    assert_eq!(res.iterations, 0);
    assert!(res.grad_norm < 1e-12);
    assert_eq!(res.status, Status::Converged);
}

#[test]
fn gevp_converges_to_the_oracle() {
    for variant in [Variant::Algor1a, Variant::Algor1b] {
        let (res, oracle) = gevp_run(GevpKind::DiagA, 200, 5, 3, variant);
        assert!(res.converged(), "{variant:?}: {:?}", res.status);
        assert!(res.grad_norm <= 1e-6);
        assert!(res.iterations < 1000);
        assert!((res.obj - oracle).abs() <= 1e-6 * oracle.abs());
        assert!(res.feasibility <= 1e-13);
        check_trace(&res, &variant.params());
    }
}

#[test]
fn isometric_variant_keeps_beta_nonnegative() {
    let (res, _) = gevp_run(GevpKind::RandomA, 120, 4, 8, Variant::Algor1b);
    assert!(res.trace.iter().all(|r| r.beta >= -1e-12));
}

#[test]
fn cca_converges_to_the_oracle() {
    let inst = generate_cca_instance(100, 50, 5, 120, 4, None).unwrap();
    let prob = cca_problem(&inst);
    let oracle = cca_oracle(&inst).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x0 = prob.manifold().random_point(&[5, 5], &mut rng).unwrap();
    let params = SolverParams::default();
    let res = solve(&prob, &x0, &params).unwrap();
    assert!(res.converged());
    assert!((res.obj - oracle).abs() <= 1e-6 * oracle.abs());
    assert!(res.x.parts().iter().all(|p| p.feasibility() <= 1e-13));
    check_trace(&res, &params);
}

#[test]
fn runs_are_deterministic() {
    let (a, _) = gevp_run(GevpKind::RandomA, 60, 3, 5, Variant::Algor1a);
    let (b, _) = gevp_run(GevpKind::RandomA, 60, 3, 5, Variant::Algor1a);
    assert_eq!(a.obj_history, b.obj_history);
    assert_eq!(a.grad_history, b.grad_history);
}

#[test]
fn every_variant_reaches_the_same_objective() {
    let objs: Vec<f64> = Variant::ALL
        .iter()
        .map(|&v| gevp_run(GevpKind::RandomA, 80, 3, 6, v).0.obj)
        .collect();
    for o in &objs {
        assert!((o - objs[0]).abs() <= 1e-5 * objs[0].abs(), "{objs:?}");
    }
}

#[test]
fn line_search_accepts_the_armijo_point() {
    let inst = generate_gevp_instance(GevpKind::RandomA, 20, 3, 1).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = prob.manifold().random_point(&[3], &mut rng).unwrap();
    let g = prob.riemannian_gradient(&x).unwrap();
    let z = g.scaled(-1.0);
    let params = SolverParams::default();
    let out = line_search_nonmonotone(&prob, &x, &z, &g, &[0.0], 1.0, &params).unwrap();
    let f_new = prob.objective(out.step.point());
    let f = prob.objective(&x);
    assert!(f_new <= f + params.delta * out.t * g.inner(&z) + 1e-9 * f.abs());
    assert!(out.nfe_used >= 1);
    assert!((out.t.log(params.sigma).round() - out.t.log(params.sigma)).abs() < 1e-9);
}

#[test]
fn generous_window_accepts_the_first_trial() {
    let inst = generate_gevp_instance(GevpKind::DiagA, 20, 3, 1).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = prob.manifold().random_point(&[3], &mut rng).unwrap();
    let g = prob.riemannian_gradient(&x).unwrap();
    let z = g.scaled(-1.0);
    let out = line_search_nonmonotone(&prob, &x, &z, &g, &[100.0], 1e-3, &SolverParams::default()).unwrap();
    assert_eq!(out.nfe_used, 1);
    assert_eq!(out.t, 1e-3);
}

#[test]
fn line_search_rejects_ascent_and_exhausts_on_a_bad_direction() {
    let inst = generate_gevp_instance(GevpKind::DiagA, 20, 3, 1).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = prob.manifold().random_point(&[3], &mut rng).unwrap();
    let g = prob.riemannian_gradient(&x).unwrap();
    assert!(matches!(
        line_search_nonmonotone(&prob, &x, &g, &g, &[0.0], 1.0, &SolverParams::default()),
        Err(Error::Degenerate(_))
    ));
    // With the window far below f(X) no trial can pass.
    let params = SolverParams {
        max_backtracks: 3,
        ..SolverParams::default()
    };
    let err = line_search_nonmonotone(&prob, &x, &g.scaled(-1.0), &g, &[-1e6], 1.0, &params).unwrap_err();
    assert!(matches!(err, Error::LineSearchFailure { trials: 4, .. }));
}

#[test]
fn beta_is_bounded_by_fletcher_reeves() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    for _ in 0..200 {
        let gn: f64 = rng.random_range(0.0..5.0);
        let go: f64 = rng.random_range(0.1..5.0);
        let inner: f64 = rng.random_range(-1.0..1.0) * gn * go;
        let b = beta_mprp(gn, go, inner).unwrap();
        assert!(b <= gn * gn / (go * go) + 1e-15);
        // |⟨g₊, T(g)⟩| ≤ ‖g₊‖‖g‖ whenever ‖T(g)‖ = ‖g‖
        assert!(b >= -1e-12);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let inst = generate_gevp_instance(GevpKind::DiagA, 10, 2, 1).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x0 = prob.manifold().random_point(&[2], &mut rng).unwrap();
    let bad = [
        SolverParams {
            sigma: 1.0,
            ..SolverParams::default()
        },
        SolverParams {
            t_min: 2.0,
            ..SolverParams::default()
        },
        SolverParams {
            q: 0,
            ..SolverParams::default()
        },
        SolverParams {
            retraction: gstiefel_core::Retraction::Polar,
            ..SolverParams::default()
        },
    ];
    for p in bad {
        assert!(matches!(solve(&prob, &x0, &p), Err(Error::InvalidParams(_))), "{p:?}");
    }
}

#[test]
fn infeasible_start_is_rejected_and_drift_is_restored() {
    let inst = generate_gevp_instance(GevpKind::DiagA, 10, 2, 1).unwrap();
    let prob = gevp_problem(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x0 = prob.manifold().random_point(&[2], &mut rng).unwrap();
    let bad = prob.manifold().point(vec![x0.parts()[0].matrix() * 1.1]).unwrap();
    assert!(matches!(
        solve(&prob, &bad, &SolverParams::default()),
        Err(Error::Infeasible { .. })
    ));

    // A start that is feasible to 1e-10 but not to ε_c gets restored.
    let nudged = x0.parts()[0].matrix() * (1.0 + 1e-11);
    let start = prob.manifold().point(vec![nudged]).unwrap();
    let res = solve(
        &prob,
        &start,
        &SolverParams {
            max_iter: 1,
            ..SolverParams::default()
        },
    )
    .unwrap();
    assert!(res.feasibility <= 1e-13);
    let _: &Mat = res.x.parts()[0].matrix();
}
