use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, LevelFilter};
use serde::Deserialize;

use dce::data::{generate_synthetic, load_benchmark, write_benchmark, GenConfig, Thresholds};
use dce::engine::{
    run_dce, run_domain_specific_baseline, run_prototype_baseline, run_shared_baseline,
    save_checkpoint, FinalModel, Method, RunConfig,
};
use dce::eval::{accuracy_csv, cpd_csv, RunReport};
use dce::model::FusionMode;

#[derive(Parser)]
#[command(
    name = "dce",
    version,
    about = "Imbalanced domain-incremental learning on feature streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark directory.
    Gen(GenArgs),
    /// Run one method over a benchmark and write its report.
    Train(TrainArgs),
    /// Aggregate run reports into mean ± std per method.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    domains: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    test_per_class: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    drift: Option<f64>,
    /// Keep the same class-to-frequency ranking in every domain.
    #[arg(long)]
    no_permute: bool,
    /// Few/many thresholds as `low,high`.
    #[arg(long, value_parser = parse_thresholds)]
    thresholds: Option<Thresholds>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dce,
    Shared,
    Domain,
    Prototype,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dce => Method::Dce,
            MethodArg::Shared => Method::Shared,
            MethodArg::Domain => Method::Domain,
            MethodArg::Prototype => Method::Prototype,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated loss exponents, e.g. `0,1,2,3`.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    cov_min_samples: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs_stage1: Option<usize>,
    #[arg(long)]
    epochs_stage2: Option<usize>,
    /// Use raw selector outputs as fusion weights.
    #[arg(long)]
    raw_selector: bool,
    /// Directory for the trained model (dce only).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Directory for accuracy.csv and cpd.csv.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Keys accepted in `--config` files for either command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliConfig {
    out: Option<PathBuf>,
    domains: Option<usize>,
    classes: Option<usize>,
    dim: Option<usize>,
    rho: Option<f64>,
    n_max: Option<usize>,
    test_per_class: Option<usize>,
    noise: Option<f64>,
    drift: Option<f64>,
    permute: Option<bool>,
    thresholds: Option<Thresholds>,
    seed: Option<u64>,
    data: Option<PathBuf>,
    method: Option<Method>,
    alphas: Option<Vec<f64>>,
    k: Option<usize>,
    cov_min_samples: Option<usize>,
    lr: Option<f64>,
    momentum: Option<f64>,
    batch_size: Option<usize>,
    epochs_stage1: Option<usize>,
    epochs_stage2: Option<usize>,
    fusion: Option<FusionMode>,
    checkpoint: Option<PathBuf>,
    csv: Option<PathBuf>,
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<dce::Error>() {
            Some(dce::Error::InvalidConfig(_)) => Failure::Usage(format!("{e:#}")),
            _ => Failure::Runtime(e),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err("expected `low,high`".into());
    };
    let low = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let high = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Thresholds::new(low, high).map_err(|e| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Runtime)?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn init_logging() {
    let level = match std::env::var("DIL_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        _ => LevelFilter::Info,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = GenConfig::default();
    macro_rules! apply {
        ($($field:ident <- $flag:ident),*) => {$(
            if let Some(v) = args.$flag.or(file.$flag) { cfg.$field = v; }
        )*};
    }
    apply!(num_domains <- domains, num_classes <- classes, dim <- dim, rho <- rho,
        seed <- seed, n_max <- n_max, test_per_class <- test_per_class,
        noise_sigma <- noise, drift_strength <- drift, thresholds <- thresholds);
    if args.no_permute {
        cfg.permute_frequencies = false;
    } else if let Some(p) = file.permute {
        cfg.permute_frequencies = p;
    }
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| usage("--out is required"))?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let stream = generate_synthetic(&cfg).map_err(anyhow::Error::from)?;
    write_benchmark(&stream, &cfg, &out).map_err(anyhow::Error::from)?;

    let mut summary = format!(
        "wrote {} domains, {} classes, d={} to {}\n",
        stream.len(),
        stream.num_classes,
        stream.dim,
        out.display()
    );
    for task in &stream.tasks {
        let present: Vec<usize> = task
            .class_counts
            .iter()
            .copied()
            .filter(|&n| n > 0)
            .collect();
        let max = present.iter().copied().max().unwrap_or(0);
        let min = present.iter().copied().min().unwrap_or(0);
        let _ = writeln!(
            summary,
            "{}: train={} test={} max={} min={} rho={:.2}",
            task.name,
            task.train.len(),
            task.test.len(),
            max,
            min,
            if min > 0 {
                max as f64 / min as f64
            } else {
                f64::NAN
            }
        );
    }
    print!("{summary}");
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), Failure> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = RunConfig::default();
    if let Some(v) = args.seed.or(file.seed) {
        cfg.seed = v;
    }
    if let Some(v) = args.alphas.or(file.alphas) {
        cfg.alphas = v;
    }
    if let Some(v) = args.k.or(file.k) {
        cfg.k = v;
    }
    if let Some(v) = args.cov_min_samples.or(file.cov_min_samples) {
        cfg.cov_min_samples = v;
    }
    if let Some(v) = args.lr.or(file.lr) {
        cfg.train.lr0 = v;
    }
    if let Some(v) = args.momentum.or(file.momentum) {
        cfg.train.momentum = v;
    }
    if let Some(v) = args.batch_size.or(file.batch_size) {
        cfg.train.batch_size = v;
    }
    if let Some(v) = args.epochs_stage1.or(file.epochs_stage1) {
        cfg.train.epochs_stage1 = v;
    }
    if let Some(v) = args.epochs_stage2.or(file.epochs_stage2) {
        cfg.train.epochs_stage2 = v;
    }
    if args.raw_selector {
        cfg.fusion = FusionMode::Raw;
    } else if let Some(f) = file.fusion {
        cfg.fusion = f;
    }
    let method = args
        .method
        .map(Method::from)
        .or(file.method)
        .unwrap_or(Method::Dce);
    let data = args
        .data
        .or(file.data)
        .ok_or_else(|| usage("--data is required"))?;
    let checkpoint = args.checkpoint.or(file.checkpoint);
    let csv = args.csv.or(file.csv);
    let out = args.out.or(file.out);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if checkpoint.is_some() && method != Method::Dce {
        return Err(usage("--checkpoint is only supported for --method dce"));
    }

    let stream = load_benchmark(&data).map_err(anyhow::Error::from)?;
    info!("method={method} seed={} tasks={}", cfg.seed, stream.len());
    debug!("config: {cfg:?}");
    let run = match method {
        Method::Dce => run_dce(&stream, &cfg),
        Method::Shared => run_shared_baseline(&stream, &cfg),
        Method::Domain => run_domain_specific_baseline(&stream, &cfg),
        Method::Prototype => run_prototype_baseline(&stream, &cfg),
    }
    .map_err(anyhow::Error::from)?;
    for s in &run.ledger.snapshots {
        info!("stage {}: A_b={:.4}", s.b, s.a_b);
    }
    let report = run.report().map_err(anyhow::Error::from)?;

    if let (Some(dir), FinalModel::Dce(model)) = (&checkpoint, &run.model) {
        save_checkpoint(model, dir).map_err(anyhow::Error::from)?;
    }
    if let Some(dir) = &csv {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in [
            ("accuracy.csv", accuracy_csv(&report)),
            ("cpd.csv", cpd_csv(&report)),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    match &out {
        Some(path) => report.write(path).map_err(anyhow::Error::from)?,
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

const METRICS: [&str; 6] = ["A_bar", "A_B", "A_many", "A_med", "A_few", "CPD_all"];

fn metric_values(r: &RunReport) -> [Option<f64>; 6] {
    [
        Some(r.a_bar),
        Some(r.a_final),
        r.a_many,
        r.a_med,
        r.a_few,
        r.cpd.all.as_ref().map(|c| c.mean),
    ]
}

/// Mean and population standard deviation; `None` when any run lacks the metric.
fn mean_std(values: &[Option<f64>]) -> Option<(f64, f64)> {
    let xs: Vec<f64> = values.iter().copied().collect::<Option<_>>()?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let mut groups: Vec<(String, Vec<RunReport>)> = Vec::new();
    for path in &args.reports {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Runtime)?;
        let report: RunReport = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{} is not a run report: {e}", path.display())))?;
        match groups.iter_mut().find(|(m, _)| *m == report.method) {
            Some((_, v)) => v.push(report),
            None => groups.push((report.method.clone(), vec![report])),
        }
    }

    let mut out = String::new();
    match args.format {
        Format::Csv => {
            out.push_str("method,runs");
            for m in METRICS {
                let _ = write!(out, ",{m}_mean,{m}_std");
            }
            out.push('\n');
        }
        Format::Text => {
            let _ = write!(out, "{:<10} {:>4}", "method", "runs");
            for m in METRICS {
                let _ = write!(out, " {m:>17}");
            }
            out.push('\n');
        }
    }
    for (method, reports) in &groups {
        let per_run: Vec<[Option<f64>; 6]> = reports.iter().map(metric_values).collect();
        let stats: Vec<Option<(f64, f64)>> = (0..METRICS.len())
            .map(|i| mean_std(&per_run.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .collect();
        match args.format {
            Format::Csv => {
                let _ = write!(out, "{method},{}", reports.len());
                for s in &stats {
                    match s {
                        Some((m, sd)) => {
                            let _ = write!(out, ",{m},{sd}");
                        }
                        None => out.push_str(",,"),
                    }
                }
            }
            Format::Text => {
                let _ = write!(out, "{method:<10} {:>4}", reports.len());
                for s in &stats {
                    let cell = match s {
                        Some((m, sd)) => format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * sd),
                        None => "n/a".to_string(),
                    };
                    let _ = write!(out, " {cell:>17}");
                }
            }
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {}", one_line(&msg));
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(2)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
