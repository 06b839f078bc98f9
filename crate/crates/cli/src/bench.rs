//! Seeded multi-trial benchmark runs.
//!
//! Trial `t` uses seed `seed + t`: the instance generator draws from stream 0
//! of a ChaCha8 generator with that seed and the starting point from stream 1,
//! so every trial can be reproduced on its own. All variants of a trial share
//! the instance and the starting point.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gstiefel_core::problems::{
    cca_oracle, cca_problem, generate_cca_instance, generate_gevp_instance, gevp_oracle, gevp_problem, CcaInstance,
    GevpInstance, GevpKind,
};
use gstiefel_core::solver::{IterRecord, Status};
use gstiefel_core::{solve, Problem, ProductPoint, SolveResult, SolverParams, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::manifest::{save_cca, save_gevp};
use crate::params::ParamOverrides;

#[derive(Debug, Clone)]
pub enum InstanceSource {
    GevpGenerated {
        kind: GevpKind,
        n: usize,
        p: usize,
    },
    GevpGiven(Arc<GevpInstance>),
    CcaGenerated {
        m: usize,
        n: usize,
        p: usize,
        samples: usize,
        weights: Option<Vec<f64>>,
    },
    CcaGiven(Arc<CcaInstance>),
}

impl InstanceSource {
    pub fn problem_name(&self) -> &'static str {
        match self {
            Self::GevpGenerated { .. } | Self::GevpGiven(_) => "gevp",
            Self::CcaGenerated { .. } | Self::CcaGiven(_) => "cca",
        }
    }
}

pub fn kind_name(kind: GevpKind) -> &'static str {
    match kind {
        GevpKind::DiagA => "diag",
        GevpKind::RandomA => "random",
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: InstanceSource,
    pub variants: Vec<Variant>,
    pub trials: usize,
    pub seed: u64,
    pub overrides: ParamOverrides,
    /// `None` uses rayon's default pool size.
    pub threads: Option<usize>,
    /// Writes each trial's instance bundle to `<dir>/trial-<t>`.
    pub export_dir: Option<PathBuf>,
    pub keep_traces: bool,
}

impl RunConfig {
    pub fn new(source: InstanceSource, variant: Variant) -> Self {
        Self {
            source,
            variants: vec![variant],
            trials: 10,
            seed: 42,
            overrides: ParamOverrides::default(),
            threads: None,
            export_dir: None,
            keep_traces: false,
        }
    }

    pub fn params_for(&self, variant: Variant) -> SolverParams {
        self.overrides.apply(variant.params())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.variants.is_empty() {
            bail!("no variant selected");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        match &self.source {
            InstanceSource::GevpGenerated { n, p, .. } if *p == 0 || p > n => {
                bail!("need 1 ≤ p ≤ n, got n = {n}, p = {p}")
            }
            InstanceSource::CcaGenerated {
                m,
                n,
                p,
                samples,
                weights,
            } => {
                if *p == 0 || p > n || n > m {
                    bail!("need 1 ≤ p ≤ n ≤ m, got m = {m}, n = {n}, p = {p}");
                }
                if samples < m {
                    bail!("need samples ≥ m, got samples = {samples}, m = {m}");
                }
                if weights.as_ref().is_some_and(|w| w.len() != *p) {
                    bail!("--mu needs exactly p = {p} weights");
                }
            }
            _ => {}
        }
        for &v in &self.variants {
            self.params_for(v)
                .validate()
                .with_context(|| format!("parameters for {}", v.name()))?;
        }
        Ok(())
    }
}

/// One solver run. `obj` and `oracle` are in reporting convention: the
/// positive trace for GEVP, the minimized objective for CCA.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub variant: Variant,
    pub trial: usize,
    pub seed: u64,
    pub obj: f64,
    pub oracle: Option<f64>,
    pub grad_norm: f64,
    pub rel_grad_norm: f64,
    pub iterations: usize,
    pub nfe: usize,
    pub cpu: f64,
    pub feasibility: f64,
    pub status: Option<Status>,
    /// Set when the run ended in a hard error instead of a result.
    pub error: Option<String>,
    pub trace: Vec<IterRecord>,
}

impl TrialRecord {
    pub fn converged(&self) -> bool {
        self.status == Some(Status::Converged)
    }
}

/// Averages over the completed trials of one variant.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub obj: f64,
    #[serde(rename = "nrmGrad")]
    pub nrm_grad: f64,
    #[serde(rename = "rnrmGrad")]
    pub rnrm_grad: f64,
    pub itr: f64,
    pub nfe: f64,
    pub cpu: f64,
    pub feasi: f64,
    /// True iff every trial converged.
    pub converged: bool,
    pub trials: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub trials: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn hard_failures(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }
}

enum Instance {
    Gevp(Arc<GevpInstance>),
    Cca(Arc<CcaInstance>),
}

fn instance_for(cfg: &RunConfig, seed: u64, trial: usize) -> Result<Instance> {
    let inst = match &cfg.source {
        InstanceSource::GevpGenerated { kind, n, p } => {
            Instance::Gevp(Arc::new(generate_gevp_instance(*kind, *n, *p, seed)?))
        }
        InstanceSource::GevpGiven(inst) => Instance::Gevp(inst.clone()),
        InstanceSource::CcaGenerated {
            m,
            n,
            p,
            samples,
            weights,
        } => Instance::Cca(Arc::new(generate_cca_instance(
            *m,
            *n,
            *p,
            *samples,
            seed,
            weights.clone(),
        )?)),
        InstanceSource::CcaGiven(inst) => Instance::Cca(inst.clone()),
    };
    if let Some(dir) = &cfg.export_dir {
        let dir = dir.join(format!("trial-{trial}"));
        match (&inst, &cfg.source) {
            (Instance::Gevp(i), InstanceSource::GevpGenerated { kind, .. }) => {
                save_gevp(&dir, i, kind_name(*kind), Some(seed))?
            }
            (Instance::Gevp(i), _) => save_gevp(&dir, i, "user", None)?,
            (Instance::Cca(i), InstanceSource::CcaGenerated { samples, .. }) => {
                save_cca(&dir, i, Some(*samples), Some(seed))?
            }
            (Instance::Cca(i), _) => save_cca(&dir, i, None, None)?,
        }
    }
    Ok(inst)
}

/// Random feasible starting point from stream 1 of the trial seed.
pub fn starting_point<P: Problem>(problem: &P, ps: &[usize], seed: u64) -> Result<ProductPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    Ok(problem.manifold().random_point(ps, &mut rng)?)
}

fn run_variants<P: Problem>(
    cfg: &RunConfig,
    problem: &P,
    ps: &[usize],
    oracle: Option<f64>,
    sign: f64,
    trial: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let x0 = starting_point(problem, ps, seed)?;
    Ok(cfg
        .variants
        .iter()
        .map(|&variant| {
            let outcome = solve(problem, &x0, &cfg.params_for(variant));
            record(
                variant,
                trial,
                seed,
                outcome,
                oracle.map(|o| sign * o),
                sign,
                cfg.keep_traces,
            )
        })
        .collect())
}

fn record(
    variant: Variant,
    trial: usize,
    seed: u64,
    outcome: gstiefel_core::Result<SolveResult>,
    oracle: Option<f64>,
    sign: f64,
    keep_trace: bool,
) -> TrialRecord {
    match outcome {
        Ok(r) => TrialRecord {
            variant,
            trial,
            seed,
            obj: sign * r.obj,
            oracle,
            grad_norm: r.grad_norm,
            rel_grad_norm: r.rel_grad_norm,
            iterations: r.iterations,
            nfe: r.nfe,
            cpu: r.wall_time,
            feasibility: r.feasibility,
            status: Some(r.status),
            error: None,
            trace: if keep_trace { r.trace } else { Vec::new() },
        },
        Err(e) => failed_record(variant, trial, seed, e.to_string()),
    }
}

fn failed_record(variant: Variant, trial: usize, seed: u64, error: String) -> TrialRecord {
    TrialRecord {
        variant,
        trial,
        seed,
        obj: f64::NAN,
        oracle: None,
        grad_norm: f64::NAN,
        rel_grad_norm: f64::NAN,
        iterations: 0,
        nfe: 0,
        cpu: 0.0,
        feasibility: f64::NAN,
        status: None,
        error: Some(error),
        trace: Vec::new(),
    }
}

fn run_trial(cfg: &RunConfig, trial: usize) -> Vec<TrialRecord> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let attempt = || -> Result<Vec<TrialRecord>> {
        match instance_for(cfg, seed, trial)? {
            Instance::Gevp(inst) => {
                let problem = gevp_problem(&inst);
                let oracle = gevp_oracle(&inst).ok();
                run_variants(cfg, &problem, &[inst.p()], oracle, -1.0, trial, seed)
            }
            Instance::Cca(inst) => {
                let problem = cca_problem(&inst);
                let oracle = cca_oracle(&inst).ok();
                run_variants(cfg, &problem, &[inst.p(), inst.p()], oracle, 1.0, trial, seed)
            }
        }
    };
    attempt().unwrap_or_else(|e| {
        cfg.variants
            .iter()
            .map(|&v| failed_record(v, trial, seed, format!("{e:#}")))
            .collect()
    })
}

pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().context("building the thread pool")?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect());
    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let rows = cfg.variants.iter().map(|&v| summarize(v, &trials)).collect();
    Ok(BenchReport { rows, trials })
}

fn summarize(variant: Variant, trials: &[TrialRecord]) -> ReportRow {
    let mine: Vec<&TrialRecord> = trials.iter().filter(|t| t.variant == variant).collect();
    let done: Vec<&&TrialRecord> = mine.iter().filter(|t| t.error.is_none()).collect();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
        if done.is_empty() {
            f64::NAN
        } else {
            done.iter().map(|t| f(t)).sum::<f64>() / done.len() as f64
        }
    };
    ReportRow {
        algorithm: variant.name().to_owned(),
        obj: mean(&|t| t.obj),
        nrm_grad: mean(&|t| t.grad_norm),
        rnrm_grad: mean(&|t| t.rel_grad_norm),
        itr: mean(&|t| t.iterations as f64),
        nfe: mean(&|t| t.nfe as f64),
        cpu: mean(&|t| t.cpu),
        feasi: mean(&|t| t.feasibility),
        converged: mine.iter().all(|t| t.converged()),
        trials: mine.len(),
        failed: mine.len() - done.len(),
    }
}
