//! Self-check suite run by `gstiefel-cg check`: geometry, transports,
//! gradients, oracles and a short solve, on a seeded instance of size `n×p`.

use anyhow::{bail, Result};
use gstiefel_core::baseline::{baseline_retraction, BaselineKind};
use gstiefel_core::cayley::{angle_bound, CayleyStep, RetractionStrategy};
use gstiefel_core::problems::{
    cca_oracle, cca_problem, generate_cca_instance, generate_gevp_instance, gevp_oracle, gevp_problem, GevpKind,
};
use gstiefel_core::{solve, Mat, MetricContext, Problem, Retraction, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 20;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Worst measured value; compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn worst(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn geometry_checks(ctx: &MetricContext, p: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let n = ctx.n();
    let mut feas = Vec::new();
    let mut agree = Vec::new();
    let mut ring_wirth = Vec::new();
    let mut isometry = Vec::new();
    let mut relation = Vec::new();
    let mut angle = Vec::new();
    let mut baseline = Vec::new();
    let mut idempotence = Vec::new();

    for _ in 0..SAMPLES {
        let x = ctx.random_point(p, rng)?;
        let z = ctx.random_tangent(&x, rng)?.scaled(rng.random_range(0.1..2.0));
        let y = ctx.random_tangent(&x, rng)?;
        let t = rng.random_range(0.0..2.0);

        let noise = gstiefel_core::manifold::gaussian(n, p, rng);
        let once = ctx.project_tangent(&x, &noise)?;
        let twice = ctx.project_tangent(&x, once.matrix())?;
        idempotence.push(rel(twice.matrix(), once.matrix()));

        let full = CayleyStep::new(ctx, &x, &z, t, RetractionStrategy::Full)?;
        let low = CayleyStep::new(ctx, &x, &z, t, RetractionStrategy::LowRank)?;
        feas.push(full.point().feasibility().max(low.point().feasibility()));
        agree.push(rel(low.point().matrix(), full.point().matrix()));

        let d = low.transport_diff_direction(ctx);
        ring_wirth.push(d.norm() / z.norm() - 1.0);
        let iy = low.transport_iso(ctx, &y);
        isometry.push((iy.norm() - y.norm()).abs());

        let wm = |b: &Mat| low.factors().apply_wm(b);
        let predicted = d.matrix() - wm(&wm(d.matrix())) * (t * t / 4.0);
        relation.push(rel(low.transport_iso_direction(ctx).matrix(), &predicted));

        let ab = angle_bound(ctx, &x, &z, t.max(0.1))?;
        angle.push(ab.lower_bound - ab.cos_theta);

        for kind in [BaselineKind::CholQr, BaselineKind::Polar] {
            baseline.push(baseline_retraction(kind, ctx, &x, &z, t.min(0.5))?.feasibility());
        }
    }

    Ok(vec![
        CheckOutcome::at_most("projection idempotence", worst(idempotence), 1e-12),
        CheckOutcome::at_most("retraction feasibility", worst(feas), 1e-10),
        CheckOutcome::at_most("full and low-rank retraction agree", worst(agree), 1e-10),
        CheckOutcome::at_most("differentiated transport is non-expansive", worst(ring_wirth), 1e-12),
        CheckOutcome::at_most("isometric transport preserves norms", worst(isometry), 1e-10),
        CheckOutcome::at_most("transport relation", worst(relation), 1e-9),
        CheckOutcome::at_most("angle bound", worst(angle), 1e-10),
        CheckOutcome::at_most("baseline retraction feasibility", worst(baseline), 1e-11),
    ])
}

/// Worst relative gap between `⟨grad f, ξ⟩` and a central difference of
/// `f ∘ R` over random unit directions.
fn gradient_gap<P: Problem>(problem: &P, ps: &[usize], rng: &mut ChaCha8Rng) -> Result<f64> {
    let man = problem.manifold();
    let x = man.random_point(ps, rng)?;
    let g = problem.riemannian_gradient(&x)?;
    let h = 1e-5;
    let mut gap: f64 = 0.0;
    for _ in 0..10 {
        let xi = man.random_tangent(&x, rng)?;
        let fp = problem.objective(&man.retract(&x, &xi, h, Retraction::default())?);
        let fm = problem.objective(&man.retract(&x, &xi, -h, Retraction::default())?);
        let exact = g.inner(&xi);
        gap = gap.max(((fp - fm) / (2.0 * h) - exact).abs() / exact.abs().max(1e-3 * g.norm()));
    }
    Ok(gap)
}

pub fn run_checks(n: usize, p: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    if p == 0 || 2 * p > n {
        bail!("check needs 1 ≤ 2p ≤ n, got n = {n}, p = {p}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gevp = generate_gevp_instance(GevpKind::RandomA, n, p, seed)?;
    let mut out = geometry_checks(gevp.metric(), p, &mut rng)?;

    let problem = gevp_problem(&gevp);
    out.push(CheckOutcome::at_most(
        "GEVP gradient matches finite differences",
        gradient_gap(&problem, &[p], &mut rng)?,
        1e-5,
    ));
    let oracle = gevp_oracle(&gevp)?;
    let mut below = 0.0_f64;
    for _ in 0..SAMPLES {
        let x = problem.manifold().random_point(&[p], &mut rng)?;
        below = below.max(oracle - problem.objective(&x));
    }
    out.push(CheckOutcome::at_most("GEVP oracle is a lower bound", below, 1e-9));

    // Few samples per dimension keep the top canonical correlations apart;
    // many more would cluster them and slow convergence sharply.
    let cn = (n / 3).max(p);
    let cm = (n / 2).max(cn);
    let cca = generate_cca_instance(cm, cn, p, cm + cm / 5, seed, None)?;
    let cproblem = cca_problem(&cca);
    out.push(CheckOutcome::at_most(
        "CCA gradient matches finite differences",
        gradient_gap(&cproblem, &[p, p], &mut rng)?,
        1e-5,
    ));

    for variant in [Variant::Algor1a, Variant::Algor1b] {
        let x0 = problem.manifold().random_point(&[p], &mut rng)?;
        let res = solve(&problem, &x0, &variant.params())?;
        let gap = if res.converged() {
            (res.obj - oracle).abs() / oracle.abs()
        } else {
            f64::INFINITY
        };
        out.push(CheckOutcome::at_most(
            match variant {
                Variant::Algor1a => "algor1a solves GEVP to the oracle",
                _ => "algor1b solves GEVP to the oracle",
            },
            gap,
            1e-6,
        ));
    }
    let x0 = cproblem.manifold().random_point(&[p, p], &mut rng)?;
    let res = solve(&cproblem, &x0, &Variant::Algor1a.params())?;
    let coracle = cca_oracle(&cca)?;
    let gap = if res.converged() {
        (res.obj - coracle).abs() / coracle.abs()
    } else {
        f64::INFINITY
    };
    out.push(CheckOutcome::at_most("algor1a solves CCA to the oracle", gap, 1e-6));
    Ok(out)
}
