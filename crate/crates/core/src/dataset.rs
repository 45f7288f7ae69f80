//! Labelled feature matrices, CSV ingestion and the synthetic generator.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::rng::DetRng;

/// Per-class sizes of the default synthetic dataset.
pub const DEFAULT_SYNTHETIC_COUNTS: [usize; 3] = [50, 500, 100];
/// Scale applied to the standard-normal noise of the synthetic dataset.
pub const DEFAULT_NOISE_SCALE: f64 = 0.75;

/// Centers of the first three synthetic classes.
pub const SYNTHETIC_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [3.0, 0.0], [1.5, 2.6]];

/// An `n x d` matrix of finite features with one class id per row.
///
/// Class ids are dense indices into `class_names`, assigned in order of first
/// appearance when built from string labels. Subsets produced by
/// [`Dataset::select`] keep the full class id space, so a class may have no
/// rows in a subset; [`Dataset::missing_classes`] reports those.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("dataset has no feature columns".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if class_names.is_empty() {
            return Err(Error::InvalidDataset("no classes".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "class id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some(((row, col), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value {v} at row {row}, column {col}"
            )));
        }
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        Ok(Self {
            features,
            labels,
            class_names,
            feature_names: None,
        })
    }

    /// Build from string labels, mapping them to dense ids in first-appearance order.
    pub fn from_labels<S: AsRef<str>>(features: Array2<f64>, labels: &[S]) -> Result<Self> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let dense = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                *ids.entry(l).or_insert_with(|| {
                    class_names.push(l.to_string());
                    class_names.len() - 1
                })
            })
            .collect();
        Self::new(features, dense, class_names)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Size of the class id space (including classes absent from this subset).
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.labels {
            counts[c] += 1;
        }
        counts
    }

    /// Row indices of each class, ascending.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes()];
        for (i, &c) in self.labels.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// Class ids with no rows in this dataset.
    pub fn missing_classes(&self) -> Vec<usize> {
        self.class_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(id, _)| id)
            .collect()
    }

    /// Rows at `indices`, in that order, sharing this dataset's class ids.
    ///
    /// Panics if `indices` is empty or out of range.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "cannot select an empty subset");
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same labels with a replacement feature matrix of identical shape.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Dataset> {
        if features.dim() != self.features.dim() {
            return Err(Error::InvalidDataset(format!(
                "replacement features have shape {:?}, expected {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        let mut out = Dataset::new(features, self.labels.clone(), self.class_names.clone())?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Append new rows (features and class ids) after the existing ones.
    pub fn append(&self, features: &Array2<f64>, labels: &[usize]) -> Result<Dataset> {
        if labels.is_empty() {
            return Ok(self.clone());
        }
        let stacked = ndarray::concatenate(Axis(0), &[self.features.view(), features.view()])
            .map_err(|e| Error::InvalidDataset(format!("cannot append rows: {e}")))?;
        let mut all_labels = self.labels.clone();
        all_labels.extend_from_slice(labels);
        let mut out = Dataset::new(stacked, all_labels, self.class_names.clone())?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Append copies of existing rows.
    pub fn append_copies(&self, indices: &[usize]) -> Dataset {
        if indices.is_empty() {
            return self.clone();
        }
        let all: Vec<usize> = (0..self.n_samples()).chain(indices.iter().copied()).collect();
        self.select(&all)
    }
}

/// Class size summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub counts: Vec<usize>,
    pub majority_count: usize,
    pub minority_count: usize,
    /// Majority count divided by the smallest class count.
    pub imbalance_ratio: f64,
}

impl ClassStats {
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("no classes".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("every class needs at least one member".into()));
        }
        let majority_count = *counts.iter().max().unwrap_or(&0);
        let minority_count = *counts.iter().min().unwrap_or(&0);
        Ok(Self {
            counts: counts.to_vec(),
            majority_count,
            minority_count,
            imbalance_ratio: majority_count as f64 / minority_count as f64,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Class statistics over the classes that have rows in `dataset`.
pub fn class_stats(dataset: &Dataset) -> ClassStats {
    let counts: Vec<usize> = dataset.class_counts().into_iter().filter(|&c| c > 0).collect();
    ClassStats::from_counts(&counts).expect("a valid dataset has at least one populated class")
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Zero-based label column; `None` means the last column.
    pub label_column: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label_column: None,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut label_col = 0;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 1;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        match width {
            None => {
                if record.len() < 2 {
                    return Err(Error::Parse {
                        row,
                        column: 1,
                        message: "need at least one feature column and a label column".into(),
                    });
                }
                width = Some(record.len());
                label_col = options.label_column.unwrap_or(record.len() - 1);
                if label_col >= record.len() {
                    return Err(Error::InvalidArgument(format!(
                        "label column {label_col} out of range for {} columns",
                        record.len()
                    )));
                }
            }
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(w) + 1,
                    message: format!("ragged row: expected {w} fields, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        if options.has_header && header.is_none() {
            header = Some(
                record
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != label_col)
                    .map(|(_, s)| s.trim().to_string())
                    .collect(),
            );
            continue;
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == label_col {
                if cell.is_empty() {
                    return Err(Error::Parse {
                        row,
                        column: j + 1,
                        message: "empty label".into(),
                    });
                }
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
    }

    let Some(width) = width else {
        return Err(Error::InvalidDataset("empty file".into()));
    };
    if labels.is_empty() {
        return Err(Error::InvalidDataset("file has a header but no data rows".into()));
    }
    let features = Array2::from_shape_vec((labels.len(), width - 1), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let dataset = Dataset::from_labels(features, &labels)?;
    match header {
        Some(names) => dataset.with_feature_names(names),
        None => Ok(dataset),
    }
}

/// Write with a header row; the label is the last column.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, file)
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match dataset.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..dataset.n_features()).map(|j| format!("f{j}")).collect(),
    };
    header.push("class".into());
    wtr.write_record(&header)?;
    let mut fields = Vec::with_capacity(dataset.n_features() + 1);
    for (row, &label) in dataset.features().rows().into_iter().zip(dataset.labels()) {
        fields.clear();
        fields.extend(row.iter().map(|v| v.to_string()));
        fields.push(dataset.class_names()[label].clone());
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Center of synthetic class `j`: the three fixed centers, then a triangular
/// lattice strip `(1.5 j, 2.6 if j odd else 0)`.
pub fn synthetic_center(j: usize) -> [f64; 2] {
    match SYNTHETIC_CENTERS.get(j) {
        Some(c) => *c,
        None => [1.5 * j as f64, if j % 2 == 1 { 2.6 } else { 0.0 }],
    }
}

/// Gaussian blobs in 2-D: row = center + `noise_scale` * N(0, I).
///
/// Classes are named `"0"`, `"1"`, ... and emitted class by class.
pub fn generate_synthetic(seed: u64, counts: &[usize], noise_scale: f64) -> Result<Dataset> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::InvalidArgument("every class count must be at least 1".into()));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise scale must be finite and non-negative, got {noise_scale}"
        )));
    }
    let n: usize = counts.iter().sum();
    let mut rng = DetRng::seed_from(seed);
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for (class, &count) in counts.iter().enumerate() {
        let center = synthetic_center(class);
        for _ in 0..count {
            for c in center {
                values.push(c + noise_scale * rng.standard_normal());
            }
            labels.push(class);
        }
    }
    let features = Array2::from_shape_vec((n, 2), values).expect("shape matches");
    let class_names = (0..counts.len()).map(|c| c.to_string()).collect();
    Dataset::new(features, labels, class_names)?
        .with_feature_names(vec!["f0".into(), "f1".into()])
}
