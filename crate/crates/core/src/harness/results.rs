use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::ScoreTable;

use super::{score_fold, ExperimentRecord, FoldScore};

pub const RESULTS_HEADER: [&str; 13] = [
    "dataset",
    "resampler",
    "classifier",
    "seed",
    "folds",
    "gmean_mean",
    "gmean_folds",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "resample_time_s",
    "status",
    "message",
];

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Write records as the results CSV. Scores use the shortest text that
/// round-trips; failed runs show `-` for every score. With
/// `include_timing = false` the `resample_time_s` column is left empty so
/// that repeated runs produce identical files.
pub fn write_results<W: Write>(records: &[ExperimentRecord], writer: W, include_timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(RESULTS_HEADER)?;
    for r in records {
        let ok = r.status.is_ok();
        let folds = if ok {
            r.folds.iter().map(|f| f.gmean.to_string()).collect::<Vec<_>>().join(";")
        } else {
            "-".to_string()
        };
        let timing = if include_timing {
            format!("{:.6}", r.resample_seconds)
        } else {
            String::new()
        };
        out.write_record([
            r.dataset.clone(),
            r.resampler.clone(),
            r.classifier.clone(),
            r.seed.to_string(),
            r.n_folds().to_string(),
            metric(r.gmean_mean()),
            folds,
            metric(r.precision_macro()),
            metric(r.recall_macro()),
            metric(r.f1_macro()),
            timing,
            if ok { "ok" } else { "failed" }.to_string(),
            r.status.message().to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

/// One parsed line of a results CSV; only the columns the statistics need.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub resampler: String,
    pub classifier: String,
    /// `None` when the run failed.
    pub gmean_mean: Option<f64>,
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidDataset(format!("results file has no {name:?} column")))
    };
    let dataset = column("dataset")?;
    let resampler = column("resampler")?;
    let classifier = column("classifier")?;
    let gmean = column("gmean_mean")?;
    let status = headers.iter().position(|h| h.trim() == "status");
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let failed = status.is_some_and(|s| field(s) == "failed");
        let raw = field(gmean);
        let gmean_mean = if failed || raw == "-" || raw.is_empty() {
            None
        } else {
            Some(raw.parse::<f64>().map_err(|e| Error::Parse {
                row: i + 2,
                column: gmean + 1,
                message: format!("{raw:?}: {e}"),
            })?)
        };
        rows.push(ResultRow {
            dataset: field(dataset).to_string(),
            resampler: field(resampler).to_string(),
            classifier: field(classifier).to_string(),
            gmean_mean,
        });
    }
    Ok(rows)
}

/// Arrange mean G-means as a table of rows by resamplers.
///
/// Rows are datasets, or `dataset/classifier` pairs when several
/// classifiers are present; `classifier` keeps only that classifier's rows.
/// Failed runs and absent combinations become missing cells. Rows and
/// methods keep their first-appearance order.
pub fn pivot_scores(rows: &[ResultRow], classifier: Option<&str>) -> Result<ScoreTable> {
    let rows: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| classifier.is_none_or(|c| r.classifier == c))
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument(match classifier {
            Some(c) => format!("no results for classifier {c:?}"),
            None => "no results to rank".into(),
        }));
    }
    let classifiers: BTreeSet<&str> = rows.iter().map(|r| r.classifier.as_str()).collect();
    let key = |r: &ResultRow| {
        if classifiers.len() > 1 {
            format!("{}/{}", r.dataset, r.classifier)
        } else {
            r.dataset.clone()
        }
    };
    let mut row_names: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    let mut cells: HashMap<(usize, usize), Option<f64>> = HashMap::new();
    for r in &rows {
        let k = key(r);
        let i = row_names.iter().position(|n| *n == k).unwrap_or_else(|| {
            row_names.push(k.clone());
            row_names.len() - 1
        });
        let j = methods.iter().position(|m| *m == r.resampler).unwrap_or_else(|| {
            methods.push(r.resampler.clone());
            methods.len() - 1
        });
        if cells.insert((i, j), r.gmean_mean).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate result for {k:?} and resampler {:?}",
                r.resampler
            )));
        }
    }
    let scores = (0..row_names.len())
        .map(|i| (0..methods.len()).map(|j| cells.get(&(i, j)).copied().flatten()).collect())
        .collect();
    ScoreTable::new(row_names, methods, scores)
}

/// Read an external prediction file: `row_index,predicted_label` lines with
/// an optional header.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Parse {
                row: i + 1,
                column: record.len() + 1,
                message: "expected row_index,predicted_label".into(),
            });
        }
        let index = record[0].trim();
        match index.parse::<usize>() {
            Ok(idx) => out.push((idx, record[1].trim().to_string())),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: i + 1,
                    column: 1,
                    message: format!("{index:?}: {e}"),
                })
            }
        }
    }
    Ok(out)
}

/// Score externally produced predictions against the dataset's labels.
pub fn score_predictions(dataset: &Dataset, predictions: &[(usize, String)]) -> Result<FoldScore> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("prediction file is empty".into()));
    }
    let mut seen = vec![false; dataset.n_samples()];
    let mut actual = Vec::with_capacity(predictions.len());
    let mut predicted = Vec::with_capacity(predictions.len());
    for (idx, label) in predictions {
        if *idx >= dataset.n_samples() {
            return Err(Error::InvalidArgument(format!(
                "prediction for row {idx}, but the dataset has {} rows",
                dataset.n_samples()
            )));
        }
        if std::mem::replace(&mut seen[*idx], true) {
            return Err(Error::InvalidArgument(format!("row {idx} predicted twice")));
        }
        let class = dataset
            .class_names()
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown predicted label {label:?}")))?;
        actual.push(dataset.labels()[*idx]);
        predicted.push(class);
    }
    score_fold(&actual, &predicted, dataset.n_classes())
}

#[cfg(test)]
mod tests {
    use super::super::RunStatus;
    use super::*;
    use ndarray::array;

    fn record(dataset: &str, resampler: &str, classifier: &str, gmean: Option<f64>) -> ExperimentRecord {
        let folds = gmean
            .map(|g| {
                vec![FoldScore {
                    gmean: g,
                    precision: 0.5,
                    recall: 0.25,
                    f1: 0.125,
                }]
            })
            .unwrap_or_default();
        ExperimentRecord {
            dataset: dataset.into(),
            resampler: resampler.into(),
            classifier: classifier.into(),
            seed: 3,
            folds,
            resample_seconds: 0.5,
            status: match gmean {
                Some(_) => RunStatus::Ok,
                None => RunStatus::Failed("[smote] too few, really".into()),
            },
        }
    }

    #[test]
    fn write_then_read() {
        let records = vec![
            record("d1", "ndeso", "knn", Some(0.9)),
            record("d1", "smote", "knn", None),
            record("d2", "ndeso", "knn", Some(0.7)),
            record("d2", "smote", "knn", Some(0.8)),
        ];
        let mut buf = Vec::new();
        write_results(&records, &mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER.join(","));
        assert_eq!(lines[1], "d1,ndeso,knn,3,1,0.9,0.9,0.5,0.25,0.125,0.500000,ok,");
        assert_eq!(lines[2], "d1,smote,knn,3,0,-,-,-,-,-,0.500000,failed,\"[smote] too few, really\"");

        let rows = read_results(text.as_bytes()).unwrap();
        assert_eq!(rows[1].gmean_mean, None);
        let table = pivot_scores(&rows, None).unwrap();
        assert_eq!(table.rows(), ["d1", "d2"]);
        assert_eq!(table.methods(), ["ndeso", "smote"]);
        assert_eq!(table.scores()[0], [Some(0.9), None]);

        let mut quiet = Vec::new();
        write_results(&records[..1], &mut quiet, false).unwrap();
        assert!(String::from_utf8(quiet).unwrap().contains(",0.125,,ok,"));
    }

    #[test]
    fn pivot_with_several_classifiers() {
        let rows: Vec<ResultRow> = [("a", "x", "knn"), ("a", "y", "knn"), ("a", "x", "tree"), ("a", "y", "tree")]
            .iter()
            .map(|&(d, m, c)| ResultRow {
                dataset: d.into(),
                resampler: m.into(),
                classifier: c.into(),
                gmean_mean: Some(0.5),
            })
            .collect();
        let both = pivot_scores(&rows, None).unwrap();
        assert_eq!(both.rows(), ["a/knn", "a/tree"]);
        assert!(pivot_scores(&rows, Some("knn")).is_err(), "one row is not enough to rank");
        assert!(pivot_scores(&rows, Some("svm")).is_err());
        let mut dup = rows.clone();
        dup.push(rows[0].clone());
        assert!(pivot_scores(&dup, None).is_err());
    }

    #[test]
    fn predictions_scored() {
        let ds = Dataset::from_labels(array![[0.0], [1.0], [2.0], [3.0]], &["a", "b", "a", "b"]).unwrap();
        let preds = read_predictions("row_index,predicted_label\n0,a\n1,b\n2,b\n3,b\n".as_bytes()).unwrap();
        assert_eq!(preds.len(), 4);
        let s = score_predictions(&ds, &preds).unwrap();
        // Recalls: a = 1/2, b = 1.
        assert!((s.gmean - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(score_predictions(&ds, &[(9, "a".into())]).is_err());
        assert!(score_predictions(&ds, &[(0, "zzz".into())]).is_err());
        assert!(score_predictions(&ds, &[(0, "a".into()), (0, "a".into())]).is_err());
        assert!(read_predictions("0,a\nx,b\n".as_bytes()).is_err());
    }
}
