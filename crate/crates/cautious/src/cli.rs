//! Command-line surface: train, predict, evaluate, sweep, topk.
//!
//! Exit codes are script-friendly: 0 success, 2 flag/usage errors,
//! 3 data errors, 4 I/O errors. Diagnostics go to stderr. Output files
//! are written to a scratch name and renamed into place, so a failed
//! command never leaves a partial file behind.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::conformal::{CautiousClassifier, EstimatorKind, QuantileMode, TrainConfig};
use crate::data_io::{
    iris_fixture, load_features_csv, load_model, save_metrics_csv, save_model,
    save_prediction_sets, LabeledDataset, MODEL_FORMAT_VERSION,
};
use crate::density::BandwidthRule;
use crate::error::{Error, Result};
use crate::evaluation::{alpha_sweep, evaluate, topk_accuracy};

fn version_string() -> String {
    format!(
        "{} (model format {})",
        env!("CARGO_PKG_VERSION"),
        MODEL_FORMAT_VERSION
    )
}

#[derive(Parser)]
#[command(
    name = "cautious",
    version = version_string(),
    about = "Set-valued classification with calibrated coverage and null predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-class density estimators and calibrate thresholds
    Train(TrainArgs),
    /// Write prediction sets for a feature file
    Predict(PredictArgs),
    /// Score a labeled feature file: coverage, ambiguity, null rate
    Evaluate(EvaluateArgs),
    /// Recalibrate across an alpha grid and emit one metrics row per alpha
    Sweep(SweepArgs),
    /// Top-k accuracy of the raw density ranking
    Topk(TopkArgs),
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Labeled feature CSV (id,label,f0..fD)
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    features: Option<PathBuf>,
    /// Use a built-in dataset instead of --features (available: iris)
    #[arg(long, value_parser = parse_builtin)]
    builtin: Option<String>,
    /// Directory to write the model into
    #[arg(long)]
    out: PathBuf,
    /// Target miscoverage level
    #[arg(long, default_value_t = 0.1, value_parser = parse_alpha)]
    alpha: f64,
    /// Per-class alpha overrides: CSV with label,alpha rows
    #[arg(long)]
    per_class_alpha: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Kde)]
    estimator: EstimatorArg,
    /// scott, silverman, or a fixed positive width
    #[arg(long, default_value = "scott", value_parser = parse_bandwidth)]
    bandwidth: BandwidthRule,
    /// Neighbor count for knn (default: min(10, n_fit - 1))
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Fraction of each class used for fitting; the rest calibrates
    #[arg(long, default_value_t = 0.5, value_parser = parse_split_ratio)]
    split_ratio: f64,
    #[arg(long, value_enum, default_value_t = QuantileArg::FiniteSample)]
    quantile: QuantileArg,
    /// Coupling strength; supplying it switches on the class-interaction score
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<f64>,
    /// Classes with fewer calibration points are omitted from prediction sets
    #[arg(long, default_value_t = 20)]
    min_cal_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct PredictArgs {
    /// Model directory written by train
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV; labels may be empty
    #[arg(long)]
    features: PathBuf,
    /// Output CSV (id,labels,set_size,is_null)
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Output CSV (alpha,coverage,ambiguity,null_rate,n_eval,out_of_inventory)
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Alpha grid as start:stop:step, endpoints inclusive
    #[arg(long, value_parser = parse_alpha_grid)]
    alphas: AlphaGrid,
    /// Output CSV, one metrics row per alpha
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct TopkArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Prediction counts per point; must not exceed the usable class count
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Kde,
    Knn,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantileArg {
    FiniteSample,
    Empirical,
}

#[derive(Clone)]
struct AlphaGrid(Vec<f64>);

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("alpha must be in (0,1), got {v}"))
    }
}

fn parse_split_ratio(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("split ratio must be in (0,1), got {v}"))
    }
}

fn parse_lambda(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("lambda must be a nonnegative number, got {v}"))
    }
}

fn parse_bandwidth(s: &str) -> std::result::Result<BandwidthRule, String> {
    match s {
        "scott" => Ok(BandwidthRule::Scott),
        "silverman" => Ok(BandwidthRule::Silverman),
        other => {
            let v: f64 = other
                .parse()
                .map_err(|_| format!("bandwidth must be scott, silverman, or a number, got {other}"))?;
            if v.is_finite() && v > 0.0 {
                Ok(BandwidthRule::Fixed(v))
            } else {
                Err(format!("bandwidth must be positive, got {v}"))
            }
        }
    }
}

fn parse_builtin(s: &str) -> std::result::Result<String, String> {
    if s == "iris" {
        Ok(s.to_string())
    } else {
        Err(format!("unknown builtin dataset {s:?} (available: iris)"))
    }
}

/// Expands start:stop:step into the inclusive grid start, start+step, ...
/// Every point must land in (0,1); the result is strictly ascending.
fn parse_alpha_grid(s: &str) -> std::result::Result<AlphaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got {s}"));
    };
    let start: f64 = start.parse().map_err(|_| format!("bad start: {start}"))?;
    let stop: f64 = stop.parse().map_err(|_| format!("bad stop: {stop}"))?;
    let step: f64 = step.parse().map_err(|_| format!("bad step: {step}"))?;
    if !step.is_finite() || step <= 0.0 {
        return Err(format!("step must be positive, got {step}"));
    }
    if start > stop {
        return Err(format!("start {start} exceeds stop {stop}"));
    }
    let mut grid = Vec::new();
    let slack = step * 1e-9;
    for i in 0.. {
        let v = start + step * i as f64;
        if v > stop + slack {
            break;
        }
        if v <= 0.0 || v >= 1.0 {
            return Err(format!("alpha must be in (0,1), got {v}"));
        }
        grid.push(v);
    }
    Ok(AlphaGrid(grid))
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidAlpha(_)
        | Error::InvalidBandwidth(_)
        | Error::InvalidK { .. }
        | Error::InvalidConfig(_) => 2,
        Error::IoFailure(_) => 4,
        _ => 3,
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("CAUTIOUS_THREADS") else {
        return Ok(());
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => Ok(()),
        Ok(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        Err(_) => Err(format!(
            "CAUTIOUS_THREADS must be a nonnegative integer, got {raw:?}"
        )),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run() -> i32 {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Topk(args) => cmd_topk(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Writes through a scratch file in the destination directory, renaming
/// only after `write` succeeds.
fn write_atomically<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent)?;
    let scratch = tempfile::Builder::new()
        .prefix(".partial-")
        .tempfile_in(parent)?;
    write(scratch.path())?;
    scratch
        .persist(path)
        .map_err(|e| Error::IoFailure(e.error))?;
    Ok(())
}

fn load_per_class_alpha(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(crate::data_io::map_csv_error)?;
    let mut overrides = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(crate::data_io::map_csv_error)?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && record.len() >= 2 && record[0].eq_ignore_ascii_case("label") {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::RaggedRow {
                line,
                expected: 2,
                found: record.len(),
            });
        }
        let label = record[0].to_string();
        let alpha: f64 = record[1].parse().map_err(|_| Error::NonFiniteValue {
            line,
            value: record[1].to_string(),
        })?;
        if !alpha.is_finite() {
            return Err(Error::NonFiniteValue {
                line,
                value: record[1].to_string(),
            });
        }
        if overrides.insert(label.clone(), alpha).is_some() {
            return Err(Error::DuplicateId { line, id: label });
        }
    }
    Ok(overrides)
}

fn load_training_data(args: &TrainArgs) -> Result<LabeledDataset> {
    match (&args.builtin, &args.features) {
        (Some(_), _) => Ok(iris_fixture()),
        (None, Some(path)) => load_features_csv(path),
        (None, None) => unreachable!("clap enforces one of --features/--builtin"),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let per_class_alpha = match &args.per_class_alpha {
        Some(path) => load_per_class_alpha(path)?,
        None => BTreeMap::new(),
    };
    let config = TrainConfig {
        estimator: match args.estimator {
            EstimatorArg::Kde => EstimatorKind::Kde,
            EstimatorArg::Knn => EstimatorKind::Knn,
        },
        bandwidth: args.bandwidth,
        k: args.k.map(|k| k as usize),
        alpha: args.alpha,
        per_class_alpha,
        split_ratio: args.split_ratio,
        quantile_mode: match args.quantile {
            QuantileArg::FiniteSample => QuantileMode::FiniteSample,
            QuantileArg::Empirical => QuantileMode::Empirical,
        },
        interaction: args.lambda.is_some(),
        interaction_lambda: args.lambda,
        min_cal_size: args.min_cal_size,
        seed: args.seed,
    };
    config.validate()?;

    let dataset = load_training_data(&args)?;
    let pairs = dataset.labeled_pairs();
    let unlabeled = dataset.len() - pairs.len();
    if unlabeled > 0 {
        eprintln!("warning: ignoring {unlabeled} unlabeled rows");
    }
    let classifier = CautiousClassifier::train(&pairs, config)?;
    save_model(&args.out, &classifier)?;

    println!(
        "trained {} classes on {} points (dim {})",
        classifier.n_classes(),
        pairs.len(),
        classifier.dim()
    );
    println!("{:<16} {:>7} {:>7} {:>14} {:>8}", "class", "n_fit", "n_cal", "threshold", "alpha");
    for class in classifier.classes() {
        let marker = if class.omitted() { "  (omitted)" } else { "" };
        println!(
            "{:<16} {:>7} {:>7} {:>14.6} {:>8}{marker}",
            class.label(),
            class.n_fit(),
            class.n_cal(),
            class.threshold(),
            class.alpha(),
        );
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let classifier = load_model(&args.model)?;
    let dataset = load_features_csv(&args.features)?;
    let mut rows = Vec::with_capacity(dataset.len());
    for record in dataset.records() {
        let set = classifier.predict_set(&record.features)?;
        rows.push((record.id.clone(), set));
    }
    write_atomically(&args.out, |path| save_prediction_sets(path, &rows))?;
    if rows.is_empty() {
        eprintln!(
            "warning: {} has no data rows; wrote an empty prediction file",
            args.features.display()
        );
        println!("wrote 0 prediction sets to {}", args.out.display());
        return Ok(());
    }
    let n = rows.len() as f64;
    let nulls = rows.iter().filter(|(_, s)| s.is_null()).count();
    let mean_size: f64 = rows.iter().map(|(_, s)| s.len() as f64).sum::<f64>() / n;
    println!(
        "wrote {} prediction sets to {} (null fraction {:.4}, mean set size {:.4})",
        rows.len(),
        args.out.display(),
        nulls as f64 / n,
        mean_size
    );
    Ok(())
}

fn labeled_pairs_for_eval(path: &Path) -> Result<Vec<(String, crate::FeatureVector)>> {
    let dataset = load_features_csv(path)?;
    let pairs = dataset.labeled_pairs();
    let unlabeled = dataset.len() - pairs.len();
    if unlabeled > 0 {
        eprintln!("warning: ignoring {unlabeled} unlabeled rows");
    }
    Ok(pairs)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let classifier = load_model(&args.model)?;
    let pairs = labeled_pairs_for_eval(&args.features)?;
    let report = evaluate(&classifier, &pairs)?;
    write_atomically(&args.out, |path| {
        save_metrics_csv(path, std::slice::from_ref(&report))
    })?;
    println!(
        "alpha {}  coverage {:.4}  ambiguity {:.4}  null_rate {:.4}  n_eval {}  out_of_inventory {}",
        report.alpha,
        report.coverage,
        report.ambiguity,
        report.null_rate,
        report.n_eval,
        report.out_of_inventory
    );
    println!("metrics written to {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let classifier = load_model(&args.model)?;
    let pairs = labeled_pairs_for_eval(&args.features)?;
    let reports = alpha_sweep(&classifier, &pairs, &args.alphas.0)?;
    write_atomically(&args.out, |path| save_metrics_csv(path, &reports))?;
    println!(
        "wrote {} rows to {} (alpha {} .. {})",
        reports.len(),
        args.out.display(),
        args.alphas.0.first().copied().unwrap_or(f64::NAN),
        args.alphas.0.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_topk(args: TopkArgs) -> Result<()> {
    let classifier = load_model(&args.model)?;
    let pairs = labeled_pairs_for_eval(&args.features)?;
    let accuracy = topk_accuracy(&classifier, &pairs, args.k as usize)?;
    println!(
        "top-{} accuracy over {} labeled rows: {:.4}",
        args.k,
        pairs.len(),
        accuracy
    );
    Ok(())
}
