//! Confusion matrices, multiclass G-mean and macro precision/recall/F1.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Array2<u64>) -> Result<Self> {
        if counts.nrows() != counts.ncols() || counts.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "confusion matrix must be square and non-empty, got {:?}",
                counts.dim()
            )));
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn actual_count(&self, class: usize) -> u64 {
        self.counts.row(class).sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        self.counts.column(class).sum()
    }

    /// Recall of each class with at least one actual sample.
    pub fn recalls(&self) -> Vec<(usize, f64)> {
        (0..self.n_classes())
            .filter_map(|c| {
                let actual = self.actual_count(c);
                (actual > 0).then(|| (c, self.counts[[c, c]] as f64 / actual as f64))
            })
            .collect()
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    let mut counts = Array2::<u64>::zeros((n_classes, n_classes));
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= n_classes || p >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "class id out of range: actual {a}, predicted {p}, {n_classes} classes"
            )));
        }
        counts[[a, p]] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Geometric mean of per-class recall.
///
/// Classes with no actual samples are left out of the product. With two
/// classes this is `sqrt(TPR * TNR)`.
pub fn gmean(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::InvalidArgument("G-mean of an empty confusion matrix".into()));
    }
    let recalls = cm.recalls();
    if recalls.iter().any(|&(_, r)| r == 0.0) {
        return Ok(0.0);
    }
    // Mean of logs keeps many-class products away from underflow.
    let mean_log = recalls.iter().map(|&(_, r)| r.ln()).sum::<f64>() / recalls.len() as f64;
    Ok(mean_log.exp().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted means over the classes that occur as actual or predicted labels.
///
/// A class that is never predicted has precision 0; one that never occurs
/// has recall 0.
pub fn macro_prf(cm: &ConfusionMatrix) -> MacroScores {
    let mut sums = (0.0, 0.0, 0.0);
    let mut seen = 0usize;
    for c in 0..cm.n_classes() {
        let actual = cm.actual_count(c);
        let predicted = cm.predicted_count(c);
        if actual == 0 && predicted == 0 {
            continue;
        }
        let tp = cm.counts()[[c, c]] as f64;
        let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        sums.0 += precision;
        sums.1 += recall;
        sums.2 += f1;
        seen += 1;
    }
    if seen == 0 {
        return MacroScores {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    let n = seen as f64;
    MacroScores {
        precision: sums.0 / n,
        recall: sums.1 / n,
        f1: sums.2 / n,
    }
}
