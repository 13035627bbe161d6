//! Command-line harness for the exact and learned homeomorphism fits.
//!
//! Four subcommands cover the full workflow:
//!
//! * `construct` — critical-point detection, alternating-value polynomial,
//!   and exact piecewise homeomorphism for a 1D target.
//! * `fit` — train an invertible network `h` with variable-projection
//!   coefficients so `f ≈ p ∘ h`.
//! * `baseline` — direct polynomial least squares at a given total degree.
//! * `report` — combine run reports into one Markdown + CSV table.
//!
//! Every run writes an artifact directory containing `config.json` (the
//! resolved configuration), `report.json`, and per-command outputs.
//! Directories are append-only: a rerun refuses to overwrite an existing
//! run and a default output path picks a fresh sibling instead.
//!
//! Exit codes: 0 on success, 2 for input or precondition failures, 3 when
//! training diverged (the report is still written). `HOMEOFIT_THREADS`
//! caps internal parallelism; the numeric kernels are single-threaded, so
//! any accepted value runs identically.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use homeofit::construct::{construct_exact, Construction, CERT_GRID};
use homeofit::error::Error;
use homeofit::fit::{
    baseline_fit, default_config, metrics, predict_chunked, BaselineOutcome, FitConfig,
    FitOutcome, FitReport, Schedule,
};
use homeofit::invnet::LIPSCHITZ_BUDGET;
use homeofit::targets::{
    load_dataset, make_dataset, Benchmark, Dataset, GridSpec, LinearInterpolant,
};

/// Format version stamped into every checkpoint file.
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "homeofit",
    version,
    about = "Approximate continuous functions as a fixed-degree polynomial composed with a homeomorphism"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact construction for a 1D target: critical detection, alternating
    /// polynomial, piecewise homeomorphism, and a certified sup error.
    Construct(ConstructArgs),
    /// Train an invertible network h and polynomial p with f ≈ p ∘ h.
    Fit(FitArgs),
    /// Direct polynomial least-squares baseline at a given total degree.
    Baseline(BaselineArgs),
    /// Combine fit/baseline/construct reports into a comparison table.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Benchmark name (f1, f2, f3) or path to a CSV of 1D samples.
    #[arg(long)]
    target: String,
    /// Points in the critical-detection scan grid.
    #[arg(long, default_value_t = 2001)]
    scan: usize,
    /// Output directory (must not already contain a run).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Benchmark name (f1..f4, pes) or path to a CSV of 1D samples.
    #[arg(long)]
    target: String,
    /// Total degree of the polynomial basis (defaults to the benchmark's
    /// standard setting; required for CSV targets).
    #[arg(long)]
    degree: Option<usize>,
    /// Fix the polynomial coefficients (ascending basis order, e.g.
    /// `2,0,1` for 2 + h²) instead of solving for them.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed_coeffs: Option<Vec<f64>>,
    /// RNG seed for the network initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Adam steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    lr0: Option<f64>,
    /// Final learning rate.
    #[arg(long)]
    lr1: Option<f64>,
    /// Learning-rate schedule: `cosine` or `plateau:<frac>`.
    #[arg(long)]
    schedule: Option<String>,
    /// Number of residual blocks.
    #[arg(long)]
    blocks: Option<usize>,
    /// Hidden width of each residual branch.
    #[arg(long)]
    width: Option<usize>,
    /// Initial LipSwish β.
    #[arg(long)]
    beta: Option<f64>,
    /// Validation-snapshot cadence in steps.
    #[arg(long)]
    snap_every: Option<usize>,
    /// Row stride of the snapshot-selection validation subsample.
    #[arg(long)]
    val_subsample: Option<usize>,
    /// Training grid override: comma-separated points per dimension.
    #[arg(long)]
    train_grid: Option<String>,
    /// Validation grid override: comma-separated points per dimension.
    #[arg(long)]
    val_grid: Option<String>,
    /// Output directory (must not already contain a run).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Benchmark name (f1..f4, pes) or path to a CSV of 1D samples.
    #[arg(long)]
    target: String,
    /// Total degree of the polynomial.
    #[arg(long)]
    degree: usize,
    /// Fail (exit 2) on numerical rank deficiency instead of falling back
    /// to the regularized solve.
    #[arg(long)]
    no_regularize: bool,
    /// Training grid override: comma-separated points per dimension.
    #[arg(long)]
    train_grid: Option<String>,
    /// Validation grid override: comma-separated points per dimension.
    #[arg(long)]
    val_grid: Option<String>,
    /// Output directory (must not already contain a run).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// One or more report.json files from fit/baseline/construct runs.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Output directory (must not already contain a run).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure destined for the process exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_optimization_failure() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn fail2(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = read_thread_cap()?;
    match cli.cmd {
        Cmd::Construct(a) => cmd_construct(a, threads),
        Cmd::Fit(a) => cmd_fit(a, threads),
        Cmd::Baseline(a) => cmd_baseline(a, threads),
        Cmd::Report(a) => cmd_report(a, threads),
    }
}

/// Validate `HOMEOFIT_THREADS`. The kernels are single-threaded, so the
/// cap is honored by construction; the value is still validated and echoed
/// into `config.json` for provenance.
fn read_thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("HOMEOFIT_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(fail2(format!(
                "HOMEOFIT_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

// ------------------------------------------------------------------
// Target resolution
// ------------------------------------------------------------------

/// Where a target function comes from.
enum TargetSpec {
    Bench(Benchmark),
    Csv {
        name: String,
        interp: LinearInterpolant,
    },
}

impl TargetSpec {
    fn resolve(s: &str) -> Result<Self, Failure> {
        if let Ok(b) = Benchmark::from_name(s) {
            return Ok(TargetSpec::Bench(b));
        }
        let path = Path::new(s);
        if path.extension().map(|e| e == "csv").unwrap_or(false) || path.exists() {
            let ds = load_dataset(path).map_err(Failure::from)?;
            let interp = LinearInterpolant::from_dataset(&ds).map_err(Failure::from)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| s.to_string());
            return Ok(TargetSpec::Csv { name, interp });
        }
        Err(fail2(format!(
            "unknown target {s:?}: expected f1, f2, f3, f4, pes, or a CSV path"
        )))
    }

    fn name(&self) -> String {
        match self {
            TargetSpec::Bench(b) => b.name().to_string(),
            TargetSpec::Csv { name, .. } => name.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            TargetSpec::Bench(b) => b.dim(),
            TargetSpec::Csv { .. } => 1,
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            TargetSpec::Bench(b) => b.domain(),
            TargetSpec::Csv { interp, .. } => vec![interp.domain()],
        }
    }
}

/// Parse a comma-separated per-dimension point count against a domain.
fn parse_grid(spec: &str, domain: &[(f64, f64)]) -> Result<GridSpec, Failure> {
    let counts: Vec<usize> = spec
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| fail2(format!("invalid grid point count {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    if counts.len() != domain.len() {
        return Err(fail2(format!(
            "grid has {} dimensions, target has {}",
            counts.len(),
            domain.len()
        )));
    }
    let dims: Vec<(f64, f64, usize)> = domain
        .iter()
        .zip(&counts)
        .map(|(&(a, b), &n)| (a, b, n))
        .collect();
    GridSpec::equidistant(&dims).map_err(Failure::from)
}

// ------------------------------------------------------------------
// Run directories and artifacts
// ------------------------------------------------------------------

/// Resolve and create the run directory. Runs are append-only: an
/// explicit `--out` that already holds a run is rejected, and the default
/// location (`runs/<kind>-<target>`) picks the first free numbered
/// sibling.
fn prepare_out(out: Option<PathBuf>, default_name: &str) -> Result<PathBuf, Failure> {
    let dir = match out {
        Some(d) => {
            if d.join("config.json").exists() {
                return Err(fail2(format!(
                    "{} already contains a run (append-only); choose a fresh --out",
                    d.display()
                )));
            }
            d
        }
        None => {
            let base = PathBuf::from("runs");
            let mut candidate = base.join(default_name);
            let mut k = 1;
            while candidate.join("config.json").exists() {
                k += 1;
                candidate = base.join(format!("{default_name}-{k}"));
            }
            candidate
        }
    };
    fs::create_dir_all(&dir).map_err(|e| fail2(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| fail2(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| fail2(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Residual table: one row per validation point, 17 significant digits.
fn write_residuals(
    path: &Path,
    xs: &DMatrix<f64>,
    truth: &DVector<f64>,
    pred: &DVector<f64>,
) -> Result<(), Failure> {
    use std::io::Write;
    let f = fs::File::create(path)
        .map_err(|e| fail2(format!("cannot create {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    let mut emit = || -> std::io::Result<()> {
        for k in 0..xs.ncols() {
            write!(w, "x{k},")?;
        }
        writeln!(w, "truth,pred,residual")?;
        for i in 0..xs.nrows() {
            for k in 0..xs.ncols() {
                write!(w, "{:.16e},", xs[(i, k)])?;
            }
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                truth[i],
                pred[i],
                truth[i] - pred[i]
            )?;
        }
        w.flush()
    };
    emit().map_err(|e| fail2(format!("cannot write {}: {e}", path.display())))
}

/// On a library error, record the machine-readable reason in
/// `report.json` before surfacing the failure.
fn write_error_report(dir: &Path, target: &str, err: &Error) -> Result<(), Failure> {
    write_json(
        &dir.join("report.json"),
        &json!({
            "target": target,
            "error": { "reason": err.reason(), "message": err.to_string() },
        }),
    )
}

// ------------------------------------------------------------------
// construct
// ------------------------------------------------------------------

fn cmd_construct(a: ConstructArgs, threads: Option<usize>) -> Result<(), Failure> {
    let t0 = Instant::now();
    let spec = TargetSpec::resolve(&a.target)?;
    if spec.dim() != 1 {
        return Err(fail2(format!(
            "construct requires a one-dimensional target, {} has dimension {}",
            spec.name(),
            spec.dim()
        )));
    }
    if a.scan < 3 {
        return Err(fail2("scan grid needs at least 3 points"));
    }
    let dir = prepare_out(a.out, &format!("construct-{}", spec.name()))?;
    write_json(
        &dir.join("config.json"),
        &json!({
            "subcommand": "construct",
            "target": spec.name(),
            "scan": a.scan,
            "threads": threads,
            "out": dir.display().to_string(),
        }),
    )?;

    let domain = spec.domain()[0];
    let result = match &spec {
        TargetSpec::Bench(b) => {
            let b = *b;
            construct_exact(move |x| b.eval1(x), domain, a.scan)
        }
        TargetSpec::Csv { interp, .. } => {
            let f = interp.clone();
            construct_exact(move |x| f.eval(x), domain, a.scan)
        }
    };
    let c = match result {
        Ok(c) => c,
        Err(e) => {
            write_error_report(&dir, &spec.name(), &e)?;
            return Err(Failure::from(e));
        }
    };

    write_json(&dir.join("chandler.json"), &c.chandler)?;
    write_h_samples(&dir.join("h_samples.csv"), &c, domain)?;

    // Certification-grid metrics make the construct report table-compatible
    // with fit/baseline reports.
    let (xs, truth, pred) = certification_table(&spec, &c, domain)?;
    write_residuals(&dir.join("residuals.csv"), &xs, &truth, &pred)?;
    let m = metrics(&pred, &truth);
    let report = FitReport {
        model: "exact".into(),
        target: Some(spec.name()),
        dim: 1,
        rmse: m.rmse,
        mae: m.mae,
        mre: m.mre,
        sup_error: c.sup_error,
        mre_excluded: m.excluded,
        n_basis: c.degree + 1,
        degree: c.degree,
        seed: 0,
        wall_time_s: t0.elapsed().as_secs_f64(),
        train_rows: a.scan,
        val_rows: CERT_GRID,
        rank_deficient: false,
        diverged_at: None,
        residual_table: Some("residuals.csv".into()),
    };
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "construct {}: degree {}, sup error {:.3e} -> {}",
        spec.name(),
        c.degree,
        c.sup_error,
        dir.display()
    );
    Ok(())
}

fn write_h_samples(path: &Path, c: &Construction, domain: (f64, f64)) -> Result<(), Failure> {
    use std::io::Write;
    let f = fs::File::create(path)
        .map_err(|e| fail2(format!("cannot create {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    let (lo, hi) = domain;
    let mut emit = || -> Result<(), Failure> {
        writeln!(w, "x,h").map_err(|e| fail2(e.to_string()))?;
        for i in 0..CERT_GRID {
            let x = lo + (hi - lo) * i as f64 / (CERT_GRID - 1) as f64;
            let h = c.h.eval(x).map_err(Failure::from)?;
            writeln!(w, "{x:.16e},{h:.16e}").map_err(|e| fail2(e.to_string()))?;
        }
        w.flush().map_err(|e| fail2(e.to_string()))
    };
    emit()
}

fn certification_table(
    spec: &TargetSpec,
    c: &Construction,
    domain: (f64, f64),
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>), Failure> {
    let (lo, hi) = domain;
    let xs = DMatrix::from_fn(CERT_GRID, 1, |i, _| {
        lo + (hi - lo) * i as f64 / (CERT_GRID - 1) as f64
    });
    let eval = |x: f64| -> f64 {
        match spec {
            TargetSpec::Bench(b) => b.eval1(x),
            TargetSpec::Csv { interp, .. } => interp.eval(x),
        }
    };
    let truth = DVector::from_fn(CERT_GRID, |i, _| eval(xs[(i, 0)]));
    let mut pred = DVector::zeros(CERT_GRID);
    for i in 0..CERT_GRID {
        pred[i] = c.chandler.p.eval(c.h.eval(xs[(i, 0)]).map_err(Failure::from)?);
    }
    Ok((xs, truth, pred))
}

// ------------------------------------------------------------------
// fit
// ------------------------------------------------------------------

fn cmd_fit(a: FitArgs, threads: Option<usize>) -> Result<(), Failure> {
    let spec = TargetSpec::resolve(&a.target)?;
    let domain = spec.domain();

    // Start from the benchmark's standard configuration (or a bare one for
    // CSV targets), then apply the explicit overrides.
    let mut cfg = match &spec {
        TargetSpec::Bench(b) => default_config(*b),
        TargetSpec::Csv { .. } => {
            let degree = a
                .degree
                .ok_or_else(|| fail2("--degree is required for CSV targets"))?;
            let mut c = FitConfig::new(degree);
            c.train_grid = Some(parse_grid("301", &domain)?);
            c.val_grid = Some(parse_grid("2001", &domain)?);
            c
        }
    };
    if let Some(d) = a.degree {
        if cfg.degree != d {
            cfg.degree = d;
            cfg.fixed_coeffs = None;
        }
    }
    if let Some(c) = a.fixed_coeffs {
        cfg.fixed_coeffs = Some(c);
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.lr0 {
        cfg.lr0 = v;
    }
    if let Some(v) = a.lr1 {
        cfg.lr1 = v;
    }
    if let Some(s) = &a.schedule {
        cfg.schedule = parse_schedule(s)?;
    }
    if let Some(v) = a.blocks {
        cfg.n_blocks = v;
    }
    if let Some(v) = a.width {
        cfg.width = v;
    }
    if let Some(v) = a.beta {
        cfg.beta_init = v;
    }
    if let Some(v) = a.snap_every {
        cfg.snap_every = v;
    }
    if let Some(v) = a.val_subsample {
        cfg.val_subsample = v;
    }
    if let Some(g) = &a.train_grid {
        cfg.train_grid = Some(parse_grid(g, &domain)?);
    }
    if let Some(g) = &a.val_grid {
        cfg.val_grid = Some(parse_grid(g, &domain)?);
    }

    let dir = prepare_out(a.out, &format!("fit-{}-seed{}", spec.name(), cfg.seed))?;
    write_json(
        &dir.join("config.json"),
        &json!({
            "subcommand": "fit",
            "target": spec.name(),
            "threads": threads,
            "out": dir.display().to_string(),
            "fit": cfg,
        }),
    )?;

    let mut outcome = match &spec {
        TargetSpec::Bench(b) => homeofit::fit::train_benchmark(*b, &cfg),
        TargetSpec::Csv { interp, .. } => {
            let f = interp.clone();
            homeofit::fit::train_fn(|x| f.eval(x[0]), &domain, &cfg)
        }
    }
    .map_err(Failure::from)?;
    outcome.report.target = Some(spec.name());
    outcome.report.residual_table = Some("residuals.csv".into());

    write_checkpoint(&dir.join("checkpoint.json"), &cfg, &outcome)?;
    let val = validation_dataset(&spec, &cfg)?;
    let pred = predict_chunked(&outcome.net, &outcome.coeffs, &outcome.indices, &val.x)
        .map_err(Failure::from)?;
    write_residuals(&dir.join("residuals.csv"), &val.x, &val.y, &pred)?;
    write_json(&dir.join("report.json"), &outcome.report)?;

    println!(
        "fit {}: degree {} ({} basis), rmse {:.6e}, mae {:.6e} -> {}",
        spec.name(),
        outcome.report.degree,
        outcome.report.n_basis,
        outcome.report.rmse,
        outcome.report.mae,
        dir.display()
    );
    if let Some(step) = outcome.report.diverged_at {
        // The artifacts above hold the last finite snapshot; the exit code
        // still reports the optimization failure.
        return Err(Failure::from(Error::TrainingDiverged { step }));
    }
    Ok(())
}

fn parse_schedule(s: &str) -> Result<Schedule, Failure> {
    if s == "cosine" {
        return Ok(Schedule::Cosine);
    }
    if let Some(frac) = s.strip_prefix("plateau:") {
        let f: f64 = frac
            .parse()
            .map_err(|_| fail2(format!("invalid plateau fraction {frac:?}")))?;
        if !(0.0..1.0).contains(&f) {
            return Err(fail2("plateau fraction must be in [0, 1)"));
        }
        return Ok(Schedule::PlateauCosine { plateau_frac: f });
    }
    Err(fail2(format!(
        "unknown schedule {s:?}: expected `cosine` or `plateau:<frac>`"
    )))
}

/// The validation dataset a fit/baseline run scores against (mirrors the
/// trainer's own construction).
fn validation_dataset(spec: &TargetSpec, cfg: &FitConfig) -> Result<Dataset, Failure> {
    match spec {
        TargetSpec::Bench(b) => match &cfg.val_grid {
            Some(g) => make_dataset(|x| b.eval(x), g, b.cutoff()).map_err(Failure::from),
            None => b.val_dataset().map_err(Failure::from),
        },
        TargetSpec::Csv { interp, .. } => {
            let g = cfg
                .val_grid
                .as_ref()
                .ok_or_else(|| fail2("missing validation grid"))?;
            make_dataset(|x| interp.eval(x[0]), g, None).map_err(Failure::from)
        }
    }
}

fn write_checkpoint(path: &Path, cfg: &FitConfig, out: &FitOutcome) -> Result<(), Failure> {
    write_json(
        path,
        &json!({
            "format_version": CHECKPOINT_VERSION,
            "seed": cfg.seed,
            "lipschitz_budget": LIPSCHITZ_BUDGET,
            "config": cfg,
            "net": out.net,
            "coeffs": out.coeffs.as_slice(),
            "indices": out.indices,
        }),
    )
}

// ------------------------------------------------------------------
// baseline
// ------------------------------------------------------------------

fn cmd_baseline(a: BaselineArgs, threads: Option<usize>) -> Result<(), Failure> {
    let spec = TargetSpec::resolve(&a.target)?;
    let domain = spec.domain();
    let train_grid = match &a.train_grid {
        Some(g) => Some(parse_grid(g, &domain)?),
        None => None,
    };
    let val_grid = match &a.val_grid {
        Some(g) => Some(parse_grid(g, &domain)?),
        None => None,
    };

    let dir = prepare_out(
        a.out,
        &format!("baseline-{}-d{}", spec.name(), a.degree),
    )?;
    write_json(
        &dir.join("config.json"),
        &json!({
            "subcommand": "baseline",
            "target": spec.name(),
            "degree": a.degree,
            "regularize": !a.no_regularize,
            "threads": threads,
            "out": dir.display().to_string(),
        }),
    )?;

    let (train, val) = baseline_datasets(&spec, &train_grid, &val_grid)?;
    let result = baseline_fit(&train, &val, a.degree, &domain, a.no_regularize);
    let mut outcome: BaselineOutcome = match result {
        Ok(o) => o,
        Err(e) => {
            write_error_report(&dir, &spec.name(), &e)?;
            return Err(Failure::from(e));
        }
    };
    outcome.report.target = Some(spec.name());
    outcome.report.residual_table = Some("residuals.csv".into());

    let pred = outcome.model.predict(&val.x);
    write_residuals(&dir.join("residuals.csv"), &val.x, &val.y, &pred)?;
    write_json(&dir.join("report.json"), &outcome.report)?;

    println!(
        "baseline {}: degree {} ({} basis), rmse {:.6e}, mae {:.6e} -> {}",
        spec.name(),
        a.degree,
        outcome.report.n_basis,
        outcome.report.rmse,
        outcome.report.mae,
        dir.display()
    );
    Ok(())
}

fn baseline_datasets(
    spec: &TargetSpec,
    train_grid: &Option<GridSpec>,
    val_grid: &Option<GridSpec>,
) -> Result<(Dataset, Dataset), Failure> {
    match spec {
        TargetSpec::Bench(b) => {
            let train = match train_grid {
                Some(g) => make_dataset(|x| b.eval(x), g, b.cutoff()),
                None => b.train_dataset(),
            }
            .map_err(Failure::from)?;
            let val = match val_grid {
                Some(g) => make_dataset(|x| b.eval(x), g, b.cutoff()),
                None => b.val_dataset(),
            }
            .map_err(Failure::from)?;
            Ok((train, val))
        }
        TargetSpec::Csv { interp, .. } => {
            let domain = vec![interp.domain()];
            let tg = match train_grid {
                Some(g) => g.clone(),
                None => parse_grid("301", &domain)?,
            };
            let vg = match val_grid {
                Some(g) => g.clone(),
                None => parse_grid("2001", &domain)?,
            };
            let train = make_dataset(|x| interp.eval(x[0]), &tg, None).map_err(Failure::from)?;
            let val = make_dataset(|x| interp.eval(x[0]), &vg, None).map_err(Failure::from)?;
            Ok((train, val))
        }
    }
}

// ------------------------------------------------------------------
// report
// ------------------------------------------------------------------

fn cmd_report(a: ReportArgs, threads: Option<usize>) -> Result<(), Failure> {
    let mut rows: Vec<FitReport> = Vec::with_capacity(a.reports.len());
    for path in &a.reports {
        let text = fs::read_to_string(path)
            .map_err(|e| fail2(format!("cannot read {}: {e}", path.display())))?;
        let report: FitReport = serde_json::from_str(&text)
            .map_err(|e| fail2(format!("{} is not a run report: {e}", path.display())))?;
        rows.push(report);
    }

    let dir = prepare_out(a.out, "report")?;
    write_json(
        &dir.join("config.json"),
        &json!({
            "subcommand": "report",
            "reports": a.reports.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "threads": threads,
            "out": dir.display().to_string(),
        }),
    )?;

    let mut md = String::from("| model | target | dim | degree | n_basis | rmse | mae |\n");
    md.push_str("|---|---|---:|---:|---:|---:|---:|\n");
    let mut csv = String::from("model,target,dim,degree,n_basis,rmse,mae\n");
    for r in &rows {
        let target = r.target.as_deref().unwrap_or("-");
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {:.6e} | {:.6e} |\n",
            r.model, target, r.dim, r.degree, r.n_basis, r.rmse, r.mae
        ));
        csv.push_str(&format!(
            "{},{},{},{},{},{:.6e},{:.6e}\n",
            r.model, target, r.dim, r.degree, r.n_basis, r.rmse, r.mae
        ));
    }
    fs::write(dir.join("table.md"), &md)
        .map_err(|e| fail2(format!("cannot write table.md: {e}")))?;
    fs::write(dir.join("table.csv"), &csv)
        .map_err(|e| fail2(format!("cannot write table.csv: {e}")))?;
    print!("{md}");
    println!("-> {}", dir.display());
    Ok(())
}
