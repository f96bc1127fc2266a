//! Batch front end: CSV fitting with bootstrap inference, simulation
//! summaries, and oracle self-tests.
//!
//! Output is assembled fully in memory and written in one shot, so a failed
//! run never leaves a partial file, and a repeated run with the same seed is
//! byte-identical. Exit codes: 0 success, 1 usage error, 2 data error,
//! 3 numerical failure.

mod ingest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qreff_core::data::BandwidthRule;
use qreff_core::estimator::{bootstrap_se, estimate, EstimatorKind};
use qreff_core::sim::{run_monte_carlo, SimModel};
use qreff_core::{normal, oracle, Error, FitConfig, QuantileGrid};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        fn classify(e: &Error) -> u8 {
            match e {
                Error::Stage { source, .. } => classify(source),
                Error::DimensionMismatch(_) | Error::NonFinite { .. } => 2,
                Error::RankDeficient { .. }
                | Error::NotSymmetric { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::DegenerateDensity { .. }
                | Error::TooManyFailures { .. }
                | Error::Singular => 3,
                _ => 1,
            }
        }
        let msg = e.to_string();
        match classify(&e) {
            2 => CliError::Data(msg),
            3 => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qreff",
    about = "Quantile regression with pooled-information one-step efficiency corrections",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a CSV dataset and report bootstrap inference per estimator.
    Fit(FitArgs),
    /// Run a Monte Carlo comparison on a built-in simulation design.
    Simulate(SimArgs),
    /// Run the brute-force oracle battery.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV (UTF-8, header row, comma-delimited).
    #[arg(short, long)]
    input: String,
    /// Response column name.
    #[arg(short, long)]
    response: String,
    /// Comma-separated covariate column names.
    #[arg(short, long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Columns to log-transform: a comma-separated list, or "all" for the
    /// response plus every covariate.
    #[arg(long, value_delimiter = ',', default_value = "")]
    log: Vec<String>,
    /// Prepend a constant-1 intercept column.
    #[arg(long)]
    intercept: bool,
    /// Comma-separated quantile levels.
    #[arg(short, long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Derivative bandwidth override (default: automatic).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Density floor override.
    #[arg(long)]
    floor: Option<f64>,
    /// Bootstrap replications; 0 skips the bootstrap and reports the
    /// large-sample standard errors instead.
    #[arg(short = 'B', long, default_value_t = 1000)]
    bootstrap: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SimArgs {
    /// Design id: M1..M5.
    #[arg(short, long)]
    model: String,
    /// Sample size per replication.
    #[arg(short, long)]
    n: usize,
    /// Comma-separated quantile levels.
    #[arg(short, long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Number of replications.
    #[arg(short = 'R', long, default_value_t = 1000)]
    replications: usize,
    /// Derivative bandwidth override (default: automatic).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Density floor override.
    #[arg(long)]
    floor: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed; falls back to QREFF_SEED, then 0.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<String>,
    #[arg(short, long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion
            {
                print!("{e}");
                return std::process::ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return std::process::ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Selftest(args) => run_selftest(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qreff: {}", e.message());
            std::process::ExitCode::from(e.code())
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("QREFF_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn build_grid(levels: &[f64]) -> Result<QuantileGrid, CliError> {
    if levels.is_empty() {
        return Err(CliError::Usage("--grid needs at least one level".into()));
    }
    QuantileGrid::new(levels.to_vec()).map_err(|e| CliError::Usage(e.to_string()))
}

fn build_fit_config(
    bandwidth: Option<f64>,
    floor: Option<f64>,
    seed: u64,
) -> Result<FitConfig, CliError> {
    let mut cfg = FitConfig {
        seed,
        ..FitConfig::default()
    };
    if let Some(h) = bandwidth {
        cfg.bandwidth = BandwidthRule::Explicit(h);
    }
    if let Some(f) = floor {
        cfg.density_floor = f;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn emit(common: &CommonArgs, text: String) -> Result<(), CliError> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write output: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// fit

#[derive(Serialize)]
struct FitMeta {
    rows_used: usize,
    rows_rejected: usize,
    /// Largest |x_ij| in the design, the boundedness diagnostic.
    max_abs_covariate: f64,
    grid: Vec<f64>,
    bandwidth: f64,
    bootstrap: usize,
    bootstrap_failures: usize,
    seed: u64,
    clamped_density_cells: usize,
    crossed_observations: usize,
}

#[derive(Serialize)]
struct FitRow {
    tau: f64,
    coefficient: String,
    estimator: &'static str,
    est: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    esd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymptotic_se: Option<f64>,
}

#[derive(Serialize)]
struct FitOutput {
    meta: FitMeta,
    rows: Vec<FitRow>,
}

fn run_fit(args: FitArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed);
    let grid = build_grid(&args.grid)?;
    let cfg = build_fit_config(args.bandwidth, args.floor, seed)?;
    if args.covariates.is_empty() && !args.intercept {
        return Err(CliError::Usage(
            "need at least one covariate or --intercept".into(),
        ));
    }
    let log_columns = if args.log.iter().any(|c| c == "all") {
        let mut all = vec![args.response.clone()];
        all.extend(args.covariates.iter().cloned());
        all
    } else {
        args.log.iter().filter(|c| !c.is_empty()).cloned().collect()
    };
    let ingested = ingest::ingest_csv(
        &args.input,
        &ingest::IngestConfig {
            response: args.response.clone(),
            covariates: args.covariates.clone(),
            log_columns,
            intercept: args.intercept,
        },
    )?;

    let mut rows = Vec::new();
    let meta;
    if args.bootstrap > 0 {
        let boot = bootstrap_se(&ingested.dataset, &grid, &cfg, args.bootstrap, seed)
            .map_err(CliError::from)?;
        meta = FitMeta {
            rows_used: ingested.rows_used,
            rows_rejected: ingested.rows_rejected,
            max_abs_covariate: ingested.dataset.max_row_norm(),
            grid: grid.levels().to_vec(),
            bandwidth: boot.full.bandwidth(),
            bootstrap: args.bootstrap,
            bootstrap_failures: boot.failures,
            seed,
            clamped_density_cells: boot.full.diagnostics.clamped_cells,
            crossed_observations: boot.full.diagnostics.crossed_observations,
        };
        for k in 0..grid.len() {
            for (j, name) in ingested.coefficient_names.iter().enumerate() {
                for kind in EstimatorKind::ALL {
                    rows.push(FitRow {
                        tau: grid.level(k),
                        coefficient: name.clone(),
                        estimator: kind.label(),
                        est: boot.full.estimate(kind, k, j),
                        esd: Some(boot.esd(kind, k, j)),
                        p_value: Some(boot.p_value(kind, k, j)),
                        asymptotic_se: boot.full.asymptotic_se(kind, k, j),
                    });
                }
            }
        }
    } else {
        let report = estimate(&ingested.dataset, &grid, &cfg).map_err(CliError::from)?;
        meta = FitMeta {
            rows_used: ingested.rows_used,
            rows_rejected: ingested.rows_rejected,
            max_abs_covariate: ingested.dataset.max_row_norm(),
            grid: grid.levels().to_vec(),
            bandwidth: report.bandwidth(),
            bootstrap: 0,
            bootstrap_failures: 0,
            seed,
            clamped_density_cells: report.diagnostics.clamped_cells,
            crossed_observations: report.diagnostics.crossed_observations,
        };
        for k in 0..grid.len() {
            for (j, name) in ingested.coefficient_names.iter().enumerate() {
                for kind in EstimatorKind::ALL {
                    let ase = report.asymptotic_se(kind, k, j);
                    rows.push(FitRow {
                        tau: grid.level(k),
                        coefficient: name.clone(),
                        estimator: kind.label(),
                        est: report.estimate(kind, k, j),
                        esd: ase,
                        p_value: ase.map(|se| {
                            1.0 - normal::cdf((report.estimate(kind, k, j) / se).abs())
                        }),
                        asymptotic_se: ase,
                    });
                }
            }
        }
    }

    let out = FitOutput { meta, rows };
    let text = match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Tsv => fit_tsv(&out),
    };
    emit(&args.common, text)
}

fn fit_tsv(out: &FitOutput) -> String {
    let mut s = String::new();
    s.push_str("# qreff fit\n");
    s.push_str(&format!(
        "# rows_used={} rows_rejected={} max_abs_covariate={:.4} grid={} bandwidth={:.4} bootstrap={} failures={} seed={} clamped_cells={} crossed_obs={}\n",
        out.meta.rows_used,
        out.meta.rows_rejected,
        out.meta.max_abs_covariate,
        join_levels(&out.meta.grid),
        out.meta.bandwidth,
        out.meta.bootstrap,
        out.meta.bootstrap_failures,
        out.meta.seed,
        out.meta.clamped_density_cells,
        out.meta.crossed_observations,
    ));
    s.push_str("tau\tcoefficient\testimator\test\tesd\tp_value\n");
    for r in &out.rows {
        s.push_str(&format!(
            "{:.4}\t{}\t{}\t{:.4}\t{}\t{}\n",
            r.tau,
            r.coefficient,
            r.estimator,
            r.est,
            r.esd.map_or("NA".to_string(), |v| format!("{v:.4}")),
            r.p_value.map_or("NA".to_string(), |v| format!("{v:.4}")),
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimMeta {
    model: String,
    n: usize,
    replications: usize,
    failures: usize,
    seed: u64,
    grid: Vec<f64>,
}

#[derive(Serialize)]
struct SimCell {
    tau: f64,
    coefficient: String,
    estimator: &'static str,
    mean: f64,
    sd: f64,
}

#[derive(Serialize)]
struct SimOutput {
    meta: SimMeta,
    true_values: Vec<f64>,
    cells: Vec<SimCell>,
}

fn run_simulate(args: SimArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed);
    let model = SimModel::from_id(&args.model)
        .ok_or_else(|| CliError::Usage(format!("unknown model '{}'", args.model)))?;
    let grid = build_grid(&args.grid)?;
    let cfg = build_fit_config(args.bandwidth, args.floor, seed)?;
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let summary = run_monte_carlo(model, args.n, &grid, args.replications, &cfg)
        .map_err(CliError::from)?;

    let mut true_values = Vec::new();
    let mut cells = Vec::new();
    for k in 0..grid.len() {
        for j in 0..2 {
            true_values.push(summary.true_value(k, j));
            for kind in EstimatorKind::ALL {
                cells.push(SimCell {
                    tau: grid.level(k),
                    coefficient: format!("beta{}", j + 1),
                    estimator: kind.label(),
                    mean: summary.mean(kind, k, j),
                    sd: summary.sd(kind, k, j),
                });
            }
        }
    }
    let out = SimOutput {
        meta: SimMeta {
            model: model.id().to_string(),
            n: args.n,
            replications: summary.replications,
            failures: summary.failures,
            seed,
            grid: grid.levels().to_vec(),
        },
        true_values,
        cells,
    };
    let text = match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Tsv => sim_tsv(&out),
    };
    emit(&args.common, text)
}

fn sim_tsv(out: &SimOutput) -> String {
    let mut s = String::new();
    s.push_str("# qreff simulate\n");
    s.push_str(&format!(
        "# model={} n={} replications={} failures={} seed={}\n",
        out.meta.model, out.meta.n, out.meta.replications, out.meta.failures, out.meta.seed
    ));
    s.push_str("estimator");
    for tau in &out.meta.grid {
        for j in 1..=2 {
            s.push_str(&format!("\tbeta{j}({tau:.4})"));
        }
    }
    s.push('\n');
    s.push_str("True");
    for v in &out.true_values {
        s.push_str(&format!("\t{v:.4}"));
    }
    s.push('\n');
    for kind in EstimatorKind::ALL {
        s.push_str(kind.label());
        for cell in out.cells.iter().filter(|c| c.estimator == kind.label()) {
            s.push_str(&format!("\t{:.4}({:.4})", cell.mean, cell.sd));
        }
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// selftest

#[derive(Serialize)]
struct SelftestOutput {
    seed: u64,
    checks: Vec<SelftestRow>,
}

#[derive(Serialize)]
struct SelftestRow {
    check: String,
    instance: String,
    max_discrepancy: f64,
    tolerance: f64,
    pass: bool,
}

fn run_selftest(args: SelftestArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.common.seed);
    let reports = oracle::run_battery(seed);
    let all_pass = reports.iter().all(|r| r.pass);
    let out = SelftestOutput {
        seed,
        checks: reports
            .into_iter()
            .map(|r| SelftestRow {
                check: r.check,
                instance: r.instance,
                max_discrepancy: r.max_discrepancy,
                tolerance: r.tolerance,
                pass: r.pass,
            })
            .collect(),
    };
    let text = match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Tsv => {
            let mut s = String::new();
            s.push_str("check\tinstance\tmax_discrepancy\ttolerance\tpass\n");
            for r in &out.checks {
                s.push_str(&format!(
                    "{}\t{}\t{:.3e}\t{:.1e}\t{}\n",
                    r.check, r.instance, r.max_discrepancy, r.tolerance, r.pass
                ));
            }
            s
        }
    };
    emit(&args.common, text)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Numeric("oracle battery failed".into()))
    }
}

// ---------------------------------------------------------------------------

fn join_levels(levels: &[f64]) -> String {
    levels
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))
}
