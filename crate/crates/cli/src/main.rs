use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gstiefel_cg::bench::{run_benchmark, InstanceSource, RunConfig};
use gstiefel_cg::check::run_checks;
use gstiefel_cg::manifest::{load_bundle, Bundle};
use gstiefel_cg::mtx::read_mtx;
use gstiefel_cg::params::ParamOverrides;
use gstiefel_cg::report::{write_csv, write_json, write_traces, Metadata};
use gstiefel_core::problems::{CcaInstance, GevpInstance, GevpKind, CCA_SAMPLES};
use gstiefel_core::Variant;

/// Riemannian conjugate gradient on the generalized Stiefel manifold:
/// benchmark runs and self-checks.
#[derive(Parser, Debug)]
#[command(name = "gstiefel-cg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generalized eigenvalue problem max tr(XᵀAX) s.t. XᵀMX = I.
    Gevp(GevpArgs),
    /// Weighted canonical correlation analysis.
    Cca(CcaArgs),
    /// Run the property suite; exits 0 when every check passes.
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    /// A = diag(1, …, n)
    Diag,
    /// A = DᵀD with Gaussian D
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Comma-separated variants, or `all`: algor1a, algor1b, cg-cholqr, cg-pol, cg-cayley-full
    #[arg(long, value_delimiter = ',', default_value = "algor1a")]
    variant: Vec<String>,

    #[arg(long, default_value_t = 10)]
    trials: usize,

    /// Trial t uses seed + t
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// JSON file overriding solver defaults
    #[arg(long)]
    params: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file; stdout when absent. CSV output to a file also writes `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; 1 runs trials sequentially
    #[arg(long, env = "GSTIEFEL_THREADS")]
    threads: Option<usize>,

    /// Write each trial's instance bundle under this directory
    #[arg(long)]
    export_instance: Option<PathBuf>,

    /// Write per-iteration records as JSON lines
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GevpArgs {
    #[arg(long, value_enum, default_value_t = Kind::Diag)]
    kind: Kind,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    p: usize,
    /// User matrix A (MatrixMarket); requires --matrix-m
    #[arg(long, requires = "matrix_m")]
    matrix_a: Option<PathBuf>,
    /// User metric M (MatrixMarket); requires --matrix-a
    #[arg(long, requires = "matrix_a")]
    matrix_m: Option<PathBuf>,
    /// Instance bundle directory with manifest.json
    #[arg(long, conflicts_with_all = ["matrix_a", "matrix_m"])]
    instance: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CcaArgs {
    #[arg(long, default_value_t = 1000)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Number of samples T behind the covariances
    #[arg(long, default_value_t = CCA_SAMPLES)]
    samples: usize,
    /// Comma-separated diagonal of N, strictly decreasing
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, requires_all = ["matrix_cy", "matrix_cxy"])]
    matrix_cx: Option<PathBuf>,
    #[arg(long, requires_all = ["matrix_cx", "matrix_cxy"])]
    matrix_cy: Option<PathBuf>,
    #[arg(long, requires_all = ["matrix_cx", "matrix_cy"])]
    matrix_cxy: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["matrix_cx", "matrix_cy", "matrix_cxy"])]
    instance: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 60)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_variants(names: &[String]) -> Result<Vec<Variant>> {
    if names.iter().any(|n| n == "all") {
        return Ok(Variant::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| Variant::from_name(n.trim()).with_context(|| format!("unknown variant {n:?}")))
        .collect()
}

fn config(source: InstanceSource, c: &Common) -> Result<RunConfig> {
    let overrides = match &c.params {
        Some(path) => ParamOverrides::load(path)?,
        None => ParamOverrides::default(),
    };
    Ok(RunConfig {
        source,
        variants: parse_variants(&c.variant)?,
        trials: c.trials,
        seed: c.seed,
        overrides,
        threads: c.threads,
        export_dir: c.export_instance.clone(),
        keep_traces: c.trace.is_some(),
    })
}

fn gevp_source(a: &GevpArgs) -> Result<InstanceSource> {
    if let Some(dir) = &a.instance {
        return match load_bundle(dir)?.1 {
            Bundle::Gevp(inst) => Ok(InstanceSource::GevpGiven(Arc::new(inst))),
            Bundle::Cca(_) => bail!("{} holds a CCA instance", dir.display()),
        };
    }
    if let (Some(pa), Some(pm)) = (&a.matrix_a, &a.matrix_m) {
        let inst = GevpInstance::new(read_mtx(pa)?, read_mtx(pm)?, a.p)?;
        return Ok(InstanceSource::GevpGiven(Arc::new(inst)));
    }
    let kind = match a.kind {
        Kind::Diag => GevpKind::DiagA,
        Kind::Random => GevpKind::RandomA,
    };
    Ok(InstanceSource::GevpGenerated { kind, n: a.n, p: a.p })
}

fn cca_source(a: &CcaArgs) -> Result<InstanceSource> {
    if let Some(dir) = &a.instance {
        return match load_bundle(dir)?.1 {
            Bundle::Cca(inst) => Ok(InstanceSource::CcaGiven(Arc::new(inst))),
            Bundle::Gevp(_) => bail!("{} holds a GEVP instance", dir.display()),
        };
    }
    if let (Some(cx), Some(cy), Some(cxy)) = (&a.matrix_cx, &a.matrix_cy, &a.matrix_cxy) {
        let weights =
            a.mu.clone()
                .unwrap_or_else(|| gstiefel_core::problems::default_weights(a.p));
        let inst = CcaInstance::new(read_mtx(cx)?, read_mtx(cy)?, read_mtx(cxy)?, weights)?;
        return Ok(InstanceSource::CcaGiven(Arc::new(inst)));
    }
    Ok(InstanceSource::CcaGenerated {
        m: a.m,
        n: a.n,
        p: a.p,
        samples: a.samples,
        weights: a.mu.clone(),
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Returns the number of trials that ended in a hard error.
fn bench(cfg: RunConfig, c: &Common) -> Result<usize> {
    let report = run_benchmark(&cfg)?;
    let meta = Metadata::new(&cfg);

    let mut sink: Box<dyn Write> = match &c.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match c.format {
        Format::Csv => {
            write_csv(&mut sink, &report.rows)?;
            if let Some(path) = &c.out {
                let side = sidecar_path(path);
                let f = File::create(&side).with_context(|| format!("creating {}", side.display()))?;
                serde_json::to_writer_pretty(BufWriter::new(f), &meta)?;
            }
        }
        Format::Json => write_json(&mut sink, &report, &meta)?,
    }
    sink.flush()?;

    if let Some(path) = &c.trace {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        write_traces(&mut w, &report)?;
        w.flush()?;
    }
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        eprintln!(
            "error: {} trial {} (seed {}): {}",
            t.variant.name(),
            t.trial,
            t.seed,
            t.error.as_deref().unwrap_or_default()
        );
    }
    Ok(report.hard_failures())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let failures = match cli.command {
        Command::Gevp(a) => bench(config(gevp_source(&a)?, &a.common)?, &a.common)?,
        Command::Cca(a) => bench(config(cca_source(&a)?, &a.common)?, &a.common)?,
        Command::Check(a) => {
            let outcomes = run_checks(a.n, a.p, a.seed)?;
            for o in &outcomes {
                println!(
                    "{} {:<44} {:.3e} (tol {:.0e})",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.value,
                    o.tolerance
                );
            }
            outcomes.iter().filter(|o| !o.passed).count()
        }
    };
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
