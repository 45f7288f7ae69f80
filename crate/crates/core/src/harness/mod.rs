//! Experiment harness: resample, cross-validate with a built-in classifier,
//! score, and repeat over a grid of datasets, resamplers and classifiers.

mod knn;
mod results;
mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;

pub use knn::{knn_classify, KnnClassifier};
pub use results::{
    pivot_scores, read_predictions, read_results, score_predictions, write_results, ResultRow, RESULTS_HEADER,
};
pub use tree::{DecisionTree, TreeParams};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::DistanceMetric;
use crate::metrics::{confusion_matrix, gmean, macro_prf};
use crate::resample::{run_resampler, ResamplerSpec};
use crate::rng::{mix_seed, DetRng};

/// Upper bound on the number of cross-validation folds.
pub const MAX_FOLDS: usize = 5;
pub const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierSpec {
    Knn { k: usize },
    DecisionTree(TreeParams),
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Knn { k: DEFAULT_KNN_K }
    }
}

impl ClassifierSpec {
    pub fn tree() -> Self {
        ClassifierSpec::DecisionTree(TreeParams::default())
    }

    fn fit(&self, train: &Dataset) -> Model {
        match *self {
            ClassifierSpec::Knn { k } => Model::Knn(KnnClassifier::fit(train, k, DistanceMetric::Euclidean)),
            ClassifierSpec::DecisionTree(params) => Model::Tree(DecisionTree::fit(train, params)),
        }
    }
}

/// `knn`, `knn:<k>`, `tree`, `tree:<max_depth>`, `tree:<max_depth>:<min_leaf>`.
/// The default parameters print as the bare name.
impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClassifierSpec::Knn { k } if k == DEFAULT_KNN_K => f.write_str("knn"),
            ClassifierSpec::Knn { k } => write!(f, "knn:{k}"),
            ClassifierSpec::DecisionTree(p) => match (p.max_depth, p.min_leaf) {
                (None, 1) => f.write_str("tree"),
                (Some(d), 1) => write!(f, "tree:{d}"),
                (d, m) => write!(f, "tree:{}:{m}", d.map_or("none".to_string(), |d| d.to_string())),
            },
        }
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad classifier {s:?} (knn[:k] | tree[:max_depth[:min_leaf]])"));
        let positive = |v: &str| v.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(bad);
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(':');
        let spec = match parts.next().unwrap_or_default() {
            "knn" => ClassifierSpec::Knn {
                k: parts.next().map(positive).transpose()?.unwrap_or(DEFAULT_KNN_K),
            },
            "tree" | "decision_tree" => {
                let max_depth = match parts.next() {
                    None | Some("none") => None,
                    Some(v) => Some(positive(v)?),
                };
                let min_leaf = parts.next().map(positive).transpose()?.unwrap_or(1);
                ClassifierSpec::DecisionTree(TreeParams { max_depth, min_leaf })
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(spec)
    }
}

enum Model {
    Knn(KnnClassifier),
    Tree(DecisionTree),
}

impl Model {
    fn predict(&self, points: &Array2<f64>) -> Vec<usize> {
        match self {
            Model::Knn(m) => m.predict(points),
            Model::Tree(m) => m.predict(points),
        }
    }
}

/// Number of folds: the smallest populated class count, capped at 5.
pub fn n_splits(labels: &[usize]) -> std::result::Result<usize, String> {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let smallest = counts.values().copied().min().unwrap_or(0);
    let splits = smallest.min(MAX_FOLDS);
    if splits < 2 {
        return Err(format!(
            "k-fold cross-validation requires at least one train/test split by setting n_splits=2 or more, \
             got n_splits={splits}"
        ));
    }
    Ok(splits)
}

/// Fold index for every row. Each class is shuffled and dealt round-robin;
/// the dealing position carries over from one class to the next so fold
/// sizes stay balanced overall.
pub fn stratified_folds(labels: &[usize], n_splits: usize, rng: &mut DetRng) -> Vec<usize> {
    assert!(n_splits > 0, "need at least one fold");
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut fold = vec![0; labels.len()];
    let mut dealt = 0;
    for mut rows in members {
        rng.shuffle(&mut rows);
        for i in rows {
            fold[i] = dealt % n_splits;
            dealt += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldScore {
    pub gmean: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Score predictions against true labels.
pub fn score_fold(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<FoldScore> {
    let cm = confusion_matrix(actual, predicted, n_classes)?;
    let m = macro_prf(&cm);
    Ok(FoldScore {
        gmean: gmean(&cm)?,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

impl RunStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Ok)
    }

    pub fn message(&self) -> &str {
        match self {
            RunStatus::Ok => "",
            RunStatus::Failed(m) => m,
        }
    }
}

/// Outcome of one (dataset, resampler, classifier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub resampler: String,
    pub classifier: String,
    pub seed: u64,
    /// One entry per fold; empty when the run failed.
    pub folds: Vec<FoldScore>,
    pub resample_seconds: f64,
    pub status: RunStatus,
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

impl ExperimentRecord {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Mean G-mean across folds; `None` for a failed run.
    pub fn gmean_mean(&self) -> Option<f64> {
        self.aggregate(|f| f.gmean)
    }

    pub fn precision_macro(&self) -> Option<f64> {
        self.aggregate(|f| f.precision)
    }

    pub fn recall_macro(&self) -> Option<f64> {
        self.aggregate(|f| f.recall)
    }

    pub fn f1_macro(&self) -> Option<f64> {
        self.aggregate(|f| f.f1)
    }

    fn aggregate(&self, field: impl Fn(&FoldScore) -> f64) -> Option<f64> {
        (self.status.is_ok() && !self.folds.is_empty()).then(|| mean(self.folds.iter().map(field)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExperimentOptions {
    /// Split the original data into folds and resample each training part,
    /// instead of resampling everything before splitting.
    pub split_first: bool,
    /// Retry failing resamplers with smaller neighbor counts.
    pub auto_retry_k: bool,
}

fn split(ds: &Dataset, fold: &[usize], f: usize) -> (Dataset, Dataset) {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.n_samples()).partition(|&i| fold[i] == f);
    (ds.select(&train), ds.select(&test))
}

/// Run one cell. Failures of the resampler or of the fold setup are
/// recorded in the status, never returned as errors.
///
/// By default the whole dataset is resampled first and the result is split
/// into stratified folds. The generator seeded with `seed` drives the
/// resampler and then the fold assignment.
pub fn run_experiment(
    name: &str,
    dataset: &Dataset,
    resampler: &ResamplerSpec,
    classifier: &ClassifierSpec,
    seed: u64,
    options: &ExperimentOptions,
) -> ExperimentRecord {
    let mut record = ExperimentRecord {
        dataset: name.to_string(),
        resampler: resampler.name().to_string(),
        classifier: classifier.to_string(),
        seed,
        folds: Vec::new(),
        resample_seconds: 0.0,
        status: RunStatus::Ok,
    };
    let mut rng = DetRng::seed_from(seed);
    let outcome = if options.split_first {
        split_first(dataset, resampler, classifier, &mut rng, options.auto_retry_k, &mut record.resample_seconds)
    } else {
        resample_first(dataset, resampler, classifier, &mut rng, options.auto_retry_k, &mut record.resample_seconds)
    };
    match outcome {
        Ok(folds) => record.folds = folds,
        Err(message) => record.status = RunStatus::Failed(message),
    }
    record
}

fn evaluate(classifier: &ClassifierSpec, train: &Dataset, test: &Dataset) -> std::result::Result<FoldScore, String> {
    let predicted = classifier.fit(train).predict(test.features());
    score_fold(test.labels(), &predicted, test.n_classes()).map_err(|e| e.to_string())
}

fn resample_first(
    dataset: &Dataset,
    resampler: &ResamplerSpec,
    classifier: &ClassifierSpec,
    rng: &mut DetRng,
    auto_retry_k: bool,
    seconds: &mut f64,
) -> std::result::Result<Vec<FoldScore>, String> {
    let outcome = run_resampler(dataset, resampler, rng, auto_retry_k);
    *seconds = outcome.seconds;
    let resampled = outcome.result.map_err(|f| f.to_string())?;
    let splits = n_splits(resampled.labels())?;
    let fold = stratified_folds(resampled.labels(), splits, rng);
    (0..splits)
        .map(|f| {
            let (train, test) = split(&resampled, &fold, f);
            evaluate(classifier, &train, &test)
        })
        .collect()
}

fn split_first(
    dataset: &Dataset,
    resampler: &ResamplerSpec,
    classifier: &ClassifierSpec,
    rng: &mut DetRng,
    auto_retry_k: bool,
    seconds: &mut f64,
) -> std::result::Result<Vec<FoldScore>, String> {
    let splits = n_splits(dataset.labels())?;
    let fold = stratified_folds(dataset.labels(), splits, rng);
    let mut scores = Vec::with_capacity(splits);
    for f in 0..splits {
        let (train, test) = split(dataset, &fold, f);
        let outcome = run_resampler(&train, resampler, rng, auto_retry_k);
        *seconds += outcome.seconds;
        let resampled = outcome.result.map_err(|e| format!("fold {f}: {e}"))?;
        scores.push(evaluate(classifier, &resampled, &test)?);
    }
    Ok(scores)
}

/// Seed of one grid cell.
pub fn cell_seed(master_seed: u64, dataset: &str, resampler: &str, classifier: &str) -> u64 {
    mix_seed(master_seed, &[dataset, resampler, classifier])
}

/// Run every (dataset, resampler, classifier) combination.
///
/// Records come back in cross-product order (datasets outermost,
/// classifiers innermost) whatever the number of threads. `threads = None`
/// uses rayon's default pool size.
pub fn run_grid(
    datasets: &[(String, Dataset)],
    resamplers: &[ResamplerSpec],
    classifiers: &[ClassifierSpec],
    master_seed: u64,
    options: &ExperimentOptions,
    threads: Option<usize>,
) -> Result<Vec<ExperimentRecord>> {
    if datasets.is_empty() || resamplers.is_empty() || classifiers.is_empty() {
        return Err(Error::InvalidArgument(
            "a grid needs at least one dataset, resampler and classifier".into(),
        ));
    }
    let mut cells = Vec::new();
    for (name, ds) in datasets {
        for r in resamplers {
            for c in classifiers {
                cells.push((name.as_str(), ds, r, c));
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(name, ds, r, c)| {
                let seed = cell_seed(master_seed, name, r.name(), &c.to_string());
                let record = run_experiment(name, ds, r, c, seed, options);
                log::info!(
                    "{name} / {} / {c}: {}",
                    r.name(),
                    record.gmean_mean().map_or_else(|| "failed".to_string(), |g| format!("{g:.4}"))
                );
                record
            })
            .collect()
    }))
}
