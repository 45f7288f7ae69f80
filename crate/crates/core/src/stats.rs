//! Rank statistics for comparing methods over many datasets: mean ranks,
//! the Friedman chi-square test and the Nemenyi critical difference.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Studentized range critical values for infinite degrees of freedom,
/// divided by sqrt(2), for k = 2..=20 methods.
const Q_ALPHA_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];
const Q_ALPHA_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889,
    2.977768, 3.029694, 3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224,
    3.319233,
];

/// Significance levels with embedded Nemenyi critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alpha {
    #[serde(rename = "0.05")]
    P05,
    #[serde(rename = "0.10")]
    P10,
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P10 => 0.10,
        }
    }

    pub fn from_value(alpha: f64) -> Result<Self> {
        if (alpha - 0.05).abs() < 1e-12 {
            Ok(Alpha::P05)
        } else if (alpha - 0.10).abs() < 1e-12 {
            Ok(Alpha::P10)
        } else {
            Err(Error::InvalidArgument(format!(
                "alpha must be 0.05 or 0.10, got {alpha}"
            )))
        }
    }

    /// Nemenyi `q_alpha` for `k` methods.
    pub fn q(self, k: usize) -> Result<f64> {
        let table = match self {
            Alpha::P05 => &Q_ALPHA_05,
            Alpha::P10 => &Q_ALPHA_10,
        };
        if !(2..=20).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "Nemenyi critical values cover 2..=20 methods, got {k}"
            )));
        }
        Ok(table[k - 2])
    }
}

/// What to do with cells whose run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingCellPolicy {
    /// Rank the present cells of the row among themselves and give every
    /// missing cell rank `k`.
    #[default]
    WorstRank,
    /// Drop rows that have any missing cell.
    DropRow,
}

impl FromStr for MissingCellPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst-rank" | "worst_rank" => Ok(MissingCellPolicy::WorstRank),
            "drop-row" | "drop_row" => Ok(MissingCellPolicy::DropRow),
            other => Err(Error::InvalidArgument(format!(
                "unknown missing-cell policy {other:?} (worst-rank | drop-row)"
            ))),
        }
    }
}

impl fmt::Display for MissingCellPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingCellPolicy::WorstRank => "worst-rank",
            MissingCellPolicy::DropRow => "drop-row",
        })
    }
}

/// Datasets (rows) by methods (columns); higher scores are better.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    rows: Vec<String>,
    methods: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
}

impl ScoreTable {
    pub fn new(rows: Vec<String>, methods: Vec<String>, scores: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if methods.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 methods, got {}",
                methods.len()
            )));
        }
        if rows.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 datasets, got {}",
                rows.len()
            )));
        }
        if scores.len() != rows.len() || scores.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::InvalidArgument("score table shape mismatch".into()));
        }
        if scores.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("scores must be finite".into()));
        }
        Ok(Self {
            rows,
            methods,
            scores,
        })
    }

    /// Complete table from a dense matrix.
    pub fn from_dense(rows: Vec<String>, methods: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        let scores = scores
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        Self::new(rows, methods, scores)
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn scores(&self) -> &[Vec<Option<f64>>] {
        &self.scores
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn missing_cells(&self) -> usize {
        self.scores.iter().flatten().filter(|v| v.is_none()).count()
    }

    fn first_missing(&self) -> Option<(usize, usize)> {
        self.scores.iter().enumerate().find_map(|(i, row)| {
            row.iter().position(Option::is_none).map(|j| (i, j))
        })
    }

    /// Per-row ranks under `policy`: one entry per retained row.
    pub fn rank_rows(&self, policy: MissingCellPolicy) -> Result<Vec<Vec<f64>>> {
        let k = self.n_methods();
        let ranks: Vec<Vec<f64>> = self
            .scores
            .iter()
            .filter(|row| policy == MissingCellPolicy::WorstRank || row.iter().all(Option::is_some))
            .map(|row| {
                let present: Vec<f64> = row.iter().flatten().copied().collect();
                let present_ranks = rank_descending(&present);
                let mut it = present_ranks.into_iter();
                row.iter()
                    .map(|cell| match cell {
                        Some(_) => it.next().expect("one rank per present cell"),
                        None => k as f64,
                    })
                    .collect()
            })
            .collect();
        if ranks.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "only {} complete rows left after applying the {policy} policy; need at least 2",
                ranks.len()
            )));
        }
        Ok(ranks)
    }
}

/// Rank 1 for the highest score; tied scores share the mean of their ranks.
pub fn rank_descending(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

fn column_means(ranks: &[Vec<f64>]) -> Vec<f64> {
    let k = ranks[0].len();
    let n = ranks.len() as f64;
    (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

/// Mean rank of each method over a complete table.
pub fn mean_ranks(table: &ScoreTable) -> Result<Vec<f64>> {
    if let Some((i, j)) = table.first_missing() {
        return Err(Error::MissingCell {
            row: table.rows[i].clone(),
            method: table.methods[j].clone(),
        });
    }
    Ok(column_means(&table.rank_rows(MissingCellPolicy::DropRow)?))
}

/// Friedman statistic from mean ranks over `n` datasets.
pub fn friedman_statistic(mean_ranks: &[f64], n: usize) -> f64 {
    let k = mean_ranks.len() as f64;
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * n as f64 / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    // Identical ranks give exactly zero up to rounding.
    chi2.max(0.0)
}

/// Upper-tail chi-square probability with `k - 1` degrees of freedom.
pub fn friedman_p_value(chi2: f64, k: usize) -> f64 {
    let dist = ChiSquared::new((k - 1) as f64).expect("k >= 2");
    dist.sf(chi2).clamp(0.0, 1.0)
}

/// Friedman chi-square and p-value over a complete table.
pub fn friedman(table: &ScoreTable) -> Result<(f64, f64)> {
    let ranks = mean_ranks(table)?;
    let chi2 = friedman_statistic(&ranks, table.n_rows());
    Ok((chi2, friedman_p_value(chi2, table.n_methods())))
}

/// Nemenyi critical difference for `k` methods over `n` datasets.
pub fn nemenyi_cd(k: usize, n: usize, alpha: Alpha) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one dataset".into()));
    }
    let q = alpha.q(k)?;
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// `true` where two methods' mean ranks differ by at least `cd`.
pub fn significance_matrix(mean_ranks: &[f64], cd: f64) -> Vec<Vec<bool>> {
    let k = mean_ranks.len();
    (0..k)
        .map(|a| {
            (0..k)
                .map(|b| a != b && (mean_ranks[a] - mean_ranks[b]).abs() >= cd)
                .collect()
        })
        .collect()
}

/// Maximal runs of methods (sorted by mean rank) whose spread is below `cd`.
///
/// Each group lists method indices in ascending mean-rank order; groups that
/// are contained in another group, and singletons, are omitted. This is the
/// bar layout of a critical-difference diagram.
pub fn cd_groups(mean_ranks: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..mean_ranks.len()).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then(a.cmp(&b)));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && mean_ranks[order[end + 1]] - mean_ranks[order[start]] < cd {
            end += 1;
        }
        if end > start && groups.last().is_none_or(|&(_, e)| end > e) {
            groups.push((start, end));
        }
    }
    groups
        .into_iter()
        .map(|(s, e)| order[s..=e].to_vec())
        .collect()
}

/// Complete rank analysis of a score table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankResult {
    pub methods: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub n_datasets: usize,
    pub chi2: f64,
    pub p_value: f64,
    pub reject_null: bool,
    pub alpha: f64,
    pub q_alpha: f64,
    pub critical_difference: f64,
    pub significant: Vec<Vec<bool>>,
    pub groups: Vec<Vec<String>>,
    pub missing_cell_policy: MissingCellPolicy,
    pub missing_cells: usize,
}

pub fn analyze(table: &ScoreTable, policy: MissingCellPolicy, alpha: Alpha) -> Result<RankResult> {
    let ranks = table.rank_rows(policy)?;
    let n = ranks.len();
    let k = table.n_methods();
    let mean = column_means(&ranks);
    let chi2 = friedman_statistic(&mean, n);
    let p_value = friedman_p_value(chi2, k);
    let cd = nemenyi_cd(k, n, alpha)?;
    let groups = cd_groups(&mean, cd)
        .into_iter()
        .map(|g| g.into_iter().map(|j| table.methods[j].clone()).collect())
        .collect();
    Ok(RankResult {
        methods: table.methods.clone(),
        significant: significance_matrix(&mean, cd),
        mean_ranks: mean,
        n_datasets: n,
        chi2,
        p_value,
        reject_null: p_value < alpha.value(),
        alpha: alpha.value(),
        q_alpha: alpha.q(k)?,
        critical_difference: cd,
        groups,
        missing_cell_policy: policy,
        missing_cells: table.missing_cells(),
    })
}
