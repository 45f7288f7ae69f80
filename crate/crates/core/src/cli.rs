//! Command-line interface. `main` parses [`Cli`] and hands it to [`run`];
//! every command writes its console output to the supplied writer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::bundled;
use crate::dataset::{class_stats, generate_synthetic, load_csv, write_csv_to, CsvOptions, Dataset, DEFAULT_NOISE_SCALE};
use crate::error::{Error, Result};
use crate::geometry::DistanceMetric;
use crate::harness::{
    pivot_scores, read_predictions, read_results, run_experiment, run_grid, score_predictions, write_results,
    ClassifierSpec, ExperimentOptions, ExperimentRecord, RunStatus,
};
use crate::resample::{run_resampler, ResamplerSpec};
use crate::rng::{DetRng, DEFAULT_SEED};
use crate::stats::{analyze, Alpha, MissingCellPolicy, RankResult, ScoreTable};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ndeso", version, about = "Resampling toolkit for imbalanced multiclass tabular data")]
pub struct Cli {
    /// More log output on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate Gaussian-blob data with a chosen class imbalance.
    Synth(SynthArgs),
    /// Resample a CSV dataset and write the result.
    Resample(ResampleArgs),
    /// Cross-validate one resampler/classifier pair on one dataset.
    Evaluate(EvaluateArgs),
    /// Run a grid of datasets x resamplers x classifiers.
    Compare(CompareArgs),
    /// Mean ranks, Friedman test and Nemenyi critical difference from a results CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Whether CSV inputs start with a header row.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub has_header: bool,
    /// Zero-based index of the label column (default: last column).
    #[arg(long)]
    pub label_column: Option<usize>,
}

impl InputArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.has_header,
            label_column: self.label_column,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Neighbor count for the resampler (method default if omitted).
    #[arg(long)]
    pub k: Option<usize>,
    /// Distance metric for displacement: euclidean, cityblock, minkowski[:p], cosine, hamming.
    #[arg(long, default_value = "euclidean")]
    pub metric: DistanceMetric,
    /// On a resampler failure, retry with k - 1, k - 2, ... down to 1.
    #[arg(long)]
    pub auto_retry_k: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Comma-separated class sizes.
    #[arg(long, value_delimiter = ',', default_value = "50,500,100", conflicts_with = "preset")]
    pub counts: Vec<usize>,
    /// Standard deviation of the noise around each class center.
    #[arg(long, default_value_t = DEFAULT_NOISE_SCALE)]
    pub noise: f64,
    /// Write a bundled dataset instead (ignores --seed and --noise).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long, default_value = "ndeso")]
    pub method: String,
    #[command(flatten)]
    pub method_args: MethodArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub input_args: InputArgs,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset CSV (or use --bundled).
    #[arg(required_unless_present = "bundled", conflicts_with = "bundled")]
    pub input: Option<PathBuf>,
    /// Name of a bundled dataset.
    #[arg(long)]
    pub bundled: Option<String>,
    #[arg(long, default_value = "ndeso")]
    pub method: String,
    #[command(flatten)]
    pub method_args: MethodArgs,
    /// knn[:k] or tree[:max_depth[:min_leaf]].
    #[arg(long, default_value = "knn")]
    pub classifier: ClassifierSpec,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Split into folds first and resample only the training part of each fold.
    #[arg(long)]
    pub split_first: bool,
    /// Score an external prediction file (row_index,predicted_label) instead
    /// of running a resampler and classifier.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Leave resample_time_s empty so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub input_args: InputArgs,
    /// Results CSV (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Dataset CSVs; each is named after its file stem.
    pub inputs: Vec<PathBuf>,
    /// Bundled datasets to include (comma-separated, or "all"). Defaults to
    /// "synthetic" when no files are given.
    #[arg(long, value_delimiter = ',')]
    pub bundled: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "ndeso,random_over,random_under,smote")]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "knn,tree")]
    pub classifiers: Vec<ClassifierSpec>,
    #[command(flatten)]
    pub method_args: MethodArgs,
    /// Master seed; every cell derives its own seed from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub split_first: bool,
    /// Leave resample_time_s empty so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub input_args: InputArgs,
    /// Results CSV (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Results CSV written by `compare` or `evaluate`.
    pub input: PathBuf,
    /// Significance level: 0.05 or 0.10.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// worst-rank or drop-row.
    #[arg(long, default_value = "worst-rank")]
    pub missing_cell: MissingCellPolicy,
    /// Rank only this classifier's results.
    #[arg(long)]
    pub classifier: Option<String>,
    /// JSON report (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of method, mean rank and CD group membership.
    #[arg(long)]
    pub cd_out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, stdout),
        Command::Resample(a) => cmd_resample(&a, stdout),
        Command::Evaluate(a) => cmd_evaluate(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
        Command::Stats(a) => cmd_stats(&a, stdout),
    }
}

/// Run `write` against `path`, or against `stdout` when there is no path.
fn emit(path: Option<&Path>, stdout: &mut dyn Write, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush().map_err(|e| Error::io(p, e))
        }
        None => write(stdout),
    }
}

fn load_input(path: &Path, input: &InputArgs) -> Result<(String, Dataset)> {
    let ds = load_csv(path, &input.options())?;
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name, ds))
}

fn counts_line(ds: &Dataset) -> String {
    ds.class_names()
        .iter()
        .zip(ds.class_counts())
        .map(|(n, c)| format!("{n}={c}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let ds = match &args.preset {
        Some(name) => bundled::load(name)?,
        None => generate_synthetic(args.seed, &args.counts, args.noise)?,
    };
    emit(args.out.as_deref(), stdout, |w| write_csv_to(&ds, w))
}

pub fn cmd_resample(args: &ResampleArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = ResamplerSpec::from_name(&args.method, args.method_args.k, args.method_args.metric)?;
    let (_, ds) = load_input(&args.input, &args.input_args)?;
    let mut rng = DetRng::seed_from(args.seed);
    let outcome = run_resampler(&ds, &spec, &mut rng, args.method_args.auto_retry_k);
    let out = outcome.result.map_err(|f| Error::Resample(f.to_string()))?;
    crate::dataset::write_csv(&out, &args.output)?;
    let io = |e| Error::io("<stdout>", e);
    writeln!(stdout, "method: {spec}").map_err(io)?;
    if outcome.attempts > 1 {
        writeln!(stdout, "k used: {}", outcome.k_used.unwrap_or(0)).map_err(io)?;
    }
    writeln!(stdout, "before: {}", counts_line(&ds)).map_err(io)?;
    writeln!(stdout, "after: {}", counts_line(&out)).map_err(io)?;
    writeln!(
        stdout,
        "imbalance ratio: {:.3} -> {:.3}",
        class_stats(&ds).imbalance_ratio,
        class_stats(&out).imbalance_ratio
    )
    .map_err(io)?;
    writeln!(stdout, "resample seconds: {:.6}", outcome.seconds).map_err(io)?;
    Ok(())
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    schema_version: u32,
    command: &'static str,
    dataset: &'a str,
    resampler: &'a str,
    classifier: &'a str,
    k: Option<usize>,
    metric: String,
    seed: u64,
    split_first: bool,
    auto_retry_k: bool,
    status: &'static str,
    message: &'a str,
    folds: usize,
    gmean_mean: Option<f64>,
    gmean_folds: Vec<f64>,
    precision_macro: Option<f64>,
    recall_macro: Option<f64>,
    f1_macro: Option<f64>,
    resample_time_s: Option<f64>,
}

pub fn cmd_evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    let (name, ds) = match (&args.input, &args.bundled) {
        (Some(path), _) => load_input(path, &args.input_args)?,
        (None, Some(b)) => (b.clone(), bundled::load(b)?),
        (None, None) => return Err(Error::InvalidArgument("give a dataset file or --bundled".into())),
    };
    let record = match &args.predictions {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let score = score_predictions(&ds, &read_predictions(file)?)?;
            ExperimentRecord {
                dataset: name,
                resampler: "none".into(),
                classifier: "external".into(),
                seed: args.seed,
                folds: vec![score],
                resample_seconds: 0.0,
                status: RunStatus::Ok,
            }
        }
        None => {
            let spec = ResamplerSpec::from_name(&args.method, args.method_args.k, args.method_args.metric)?;
            let options = ExperimentOptions {
                split_first: args.split_first,
                auto_retry_k: args.method_args.auto_retry_k,
            };
            run_experiment(&name, &ds, &spec, &args.classifier, args.seed, &options)
        }
    };
    if let RunStatus::Failed(m) = &record.status {
        log::warn!("{} failed: {m}", record.resampler);
    }
    emit(args.out.as_deref(), stdout, |w| {
        write_results(std::slice::from_ref(&record), w, !args.no_timing)
    })?;
    if let Some(path) = &args.report {
        let ok = record.status.is_ok();
        let report = EvaluateReport {
            schema_version: SCHEMA_VERSION,
            command: "evaluate",
            dataset: &record.dataset,
            resampler: &record.resampler,
            classifier: &record.classifier,
            k: args.method_args.k,
            metric: args.method_args.metric.to_string(),
            seed: record.seed,
            split_first: args.split_first,
            auto_retry_k: args.method_args.auto_retry_k,
            status: if ok { "ok" } else { "failed" },
            message: record.status.message(),
            folds: record.n_folds(),
            gmean_mean: record.gmean_mean(),
            gmean_folds: record.folds.iter().map(|f| f.gmean).collect(),
            precision_macro: record.precision_macro(),
            recall_macro: record.recall_macro(),
            f1_macro: record.f1_macro(),
            resample_time_s: (!args.no_timing).then_some(record.resample_seconds),
        };
        write_json(path, &report)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut datasets = Vec::new();
    for path in &args.inputs {
        datasets.push(load_input(path, &args.input_args)?);
    }
    let mut bundled_names: Vec<String> = args.bundled.iter().map(|s| s.trim().to_string()).collect();
    if bundled_names.iter().any(|b| b == "all") {
        bundled_names = bundled::names().map(String::from).collect();
    }
    if bundled_names.is_empty() && datasets.is_empty() {
        bundled_names.push("synthetic".into());
    }
    for b in bundled_names {
        let ds = bundled::load(&b)?;
        datasets.push((b, ds));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some((dup, _)) = datasets.iter().find(|(n, _)| !seen.insert(n.clone())) {
        return Err(Error::InvalidArgument(format!("dataset name {dup:?} given twice")));
    }
    let methods = args
        .methods
        .iter()
        .map(|m| ResamplerSpec::from_name(m, args.method_args.k, args.method_args.metric))
        .collect::<Result<Vec<_>>>()?;
    let options = ExperimentOptions {
        split_first: args.split_first,
        auto_retry_k: args.method_args.auto_retry_k,
    };
    let records = run_grid(&datasets, &methods, &args.classifiers, args.seed, &options, args.threads)?;
    let failed = records.iter().filter(|r| !r.status.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} cells failed; see the status column", records.len());
    }
    emit(args.out.as_deref(), stdout, |w| write_results(&records, w, !args.no_timing))
}

#[derive(Serialize)]
struct StatsReport<'a> {
    schema_version: u32,
    command: &'static str,
    classifier: Option<&'a str>,
    rows: &'a [String],
    significant_pairs: Vec<(&'a str, &'a str)>,
    #[serde(flatten)]
    result: &'a RankResult,
}

fn group_label(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("g{}", i + 1)
    }
}

/// Method, mean rank and CD groups, sorted by mean rank.
pub fn write_cd_csv<W: Write>(result: &RankResult, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["method", "mean_rank", "groups"])?;
    let mut order: Vec<usize> = (0..result.methods.len()).collect();
    order.sort_by(|&a, &b| result.mean_ranks[a].total_cmp(&result.mean_ranks[b]).then(a.cmp(&b)));
    for j in order {
        let method = &result.methods[j];
        let groups: Vec<String> = result
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.contains(method))
            .map(|(i, _)| group_label(i))
            .collect();
        out.write_record([method.clone(), result.mean_ranks[j].to_string(), groups.join(";")])?;
    }
    out.flush().map_err(|e| Error::io("<cd csv>", e))?;
    Ok(())
}

pub fn cmd_stats(args: &StatsArgs, stdout: &mut dyn Write) -> Result<()> {
    let alpha = Alpha::from_value(args.alpha)?;
    let file = File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let table: ScoreTable = pivot_scores(&read_results(file)?, args.classifier.as_deref())?;
    let result = analyze(&table, args.missing_cell, alpha)?;
    let mut pairs = Vec::new();
    for a in 0..result.methods.len() {
        for b in a + 1..result.methods.len() {
            if result.significant[a][b] {
                pairs.push((result.methods[a].as_str(), result.methods[b].as_str()));
            }
        }
    }
    let report = StatsReport {
        schema_version: SCHEMA_VERSION,
        command: "stats",
        classifier: args.classifier.as_deref(),
        rows: table.rows(),
        significant_pairs: pairs,
        result: &result,
    };
    emit(args.out.as_deref(), stdout, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w).map_err(|e| Error::io("<stats report>", e))
    })?;
    if let Some(path) = &args.cd_out {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_cd_csv(&result, file)?;
    }
    Ok(())
}
