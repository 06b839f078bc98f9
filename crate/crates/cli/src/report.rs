//! CSV and JSON output of benchmark reports.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use crate::bench::{BenchReport, ReportRow, RunConfig};
use crate::params::ParamSummary;

pub const CSV_HEADER: [&str; 9] = [
    "algorithm",
    "obj",
    "nrmGrad",
    "rnrmGrad",
    "itr",
    "nfe",
    "cpu",
    "feasi",
    "converged",
];

pub fn column_definitions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("algorithm", "solver variant"),
        (
            "obj",
            "mean final objective; GEVP reports tr(XᵀAX) (maximized), CCA reports −Σ μᵢ uᵢᵀCxy vᵢ (minimized)",
        ),
        ("nrmGrad", "mean final Riemannian gradient norm ‖grad f(X)‖_X"),
        ("rnrmGrad", "mean of nrmGrad / ‖grad f(X₀)‖_X₀"),
        ("itr", "mean iteration count"),
        ("nfe", "mean number of objective evaluations"),
        (
            "cpu",
            "mean wall-clock seconds of the solve call, instance generation excluded",
        ),
        (
            "feasi",
            "mean ‖XᵀMX − I‖_F after restoration (max over factors for CCA)",
        ),
        ("converged", "true iff every trial reached ‖grad f‖ ≤ ε"),
    ])
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub problem: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub threads: Option<usize>,
    pub params: BTreeMap<String, ParamSummary>,
    pub columns: BTreeMap<&'static str, &'static str>,
}

impl Metadata {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            problem: cfg.source.problem_name(),
            seed: cfg.seed,
            trials: cfg.trials,
            threads: cfg.threads,
            params: cfg
                .variants
                .iter()
                .map(|&v| (v.name().to_owned(), ParamSummary::from(&cfg.params_for(v))))
                .collect(),
            columns: column_definitions(),
        }
    }
}

fn csv_fields(r: &ReportRow) -> [String; 9] {
    [
        r.algorithm.clone(),
        format!("{:.10e}", r.obj),
        format!("{:.3e}", r.nrm_grad),
        format!("{:.3e}", r.rnrm_grad),
        format!("{:.1}", r.itr),
        format!("{:.1}", r.nfe),
        format!("{:.3}", r.cpu),
        format!("{:.3e}", r.feasi),
        r.converged.to_string(),
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(csv_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, report: &BenchReport, meta: &Metadata) -> Result<()> {
    let trials: Vec<_> = report
        .trials
        .iter()
        .map(|t| {
            json!({
                "algorithm": t.variant.name(),
                "trial": t.trial,
                "seed": t.seed,
                "obj": t.obj,
                "oracle": t.oracle,
                "nrmGrad": t.grad_norm,
                "rnrmGrad": t.rel_grad_norm,
                "itr": t.iterations,
                "nfe": t.nfe,
                "cpu": t.cpu,
                "feasi": t.feasibility,
                "status": t.status.map(|s| format!("{s:?}")),
                "error": t.error,
            })
        })
        .collect();
    let doc = json!({ "metadata": meta, "rows": report.rows, "trials": trials });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// One JSON object per line per iteration of every kept trace.
pub fn write_traces<W: Write>(mut out: W, report: &BenchReport) -> Result<()> {
    for t in &report.trials {
        for r in &t.trace {
            let line = json!({
                "algorithm": t.variant.name(),
                "trial": t.trial,
                "k": r.k,
                "f": r.f,
                "grad_norm": r.grad_norm,
                "slope": r.slope,
                "t": r.t,
                "df": r.df,
                "beta": r.beta,
                "nfe": r.nfe,
                "restarted": r.restarted,
                "feasibility": r.feasibility,
            });
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}
