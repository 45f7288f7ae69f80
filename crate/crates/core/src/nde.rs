//! Neighbor-based displacement of noisy points toward their class centroid.
//!
//! A point is noisy when strictly more of its `k` nearest neighbors belong to
//! other classes than to its own. Each displaceable point `x` of class `c` is
//! moved onto the line through `x` and the class centroid `r`, at a distance
//! from `r` equal to the mean distance from `x` to its neighbors:
//!
//! ```text
//! S   = ||x - r||            (Euclidean)
//! v   = (r - x) / S
//! phi = mean_j d(x, x_j)     over the k neighbors, chosen metric
//! x'  = r - v * phi
//! ```
//!
//! Distances, neighbor lists and centroids all come from the original data
//! and are computed once; points are displaced in ascending index order and
//! no displacement observes another. Labels are never changed and no point
//! is removed. When `phi > S` the point ends up farther from `r` than it
//! started; this follows the formula as written.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{DistanceMetric, NeighborIndex};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdeConfig {
    pub k: usize,
    pub metric: DistanceMetric,
    /// Also displace the same-class neighbors of every directly flagged point.
    /// When off, only points with `same < diff` are moved.
    pub augment_same_class_neighbors: bool,
}

impl Default for NdeConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            metric: DistanceMetric::Euclidean,
            augment_same_class_neighbors: true,
        }
    }
}

impl NdeConfig {
    pub fn new(k: usize, metric: DistanceMetric) -> Self {
        Self {
            k,
            metric,
            ..Self::default()
        }
    }
}

/// Same-class and other-class counts among a point's neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborVote {
    pub same: usize,
    pub diff: usize,
}

impl NeighborVote {
    pub fn is_noisy(&self) -> bool {
        self.same < self.diff
    }
}

pub fn neighbor_votes(labels: &[usize], nbrs: &NeighborIndex) -> Vec<NeighborVote> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let same = nbrs.neighbors(i).iter().filter(|&&j| labels[j] == c).count();
            NeighborVote {
                same,
                diff: nbrs.k() - same,
            }
        })
        .collect()
}

/// Number of points whose neighborhood is dominated by other classes.
pub fn count_noisy(labels: &[usize], nbrs: &NeighborIndex) -> usize {
    neighbor_votes(labels, nbrs)
        .iter()
        .filter(|v| v.is_noisy())
        .count()
}

pub fn identify_displaceable(
    labels: &[usize],
    nbrs: &NeighborIndex,
    augment_same_class_neighbors: bool,
) -> BTreeSet<usize> {
    let mut flagged = BTreeSet::new();
    for (i, vote) in neighbor_votes(labels, nbrs).iter().enumerate() {
        if !vote.is_noisy() {
            continue;
        }
        flagged.insert(i);
        if augment_same_class_neighbors {
            flagged.extend(
                nbrs.neighbors(i)
                    .iter()
                    .copied()
                    .filter(|&j| labels[j] == labels[i]),
            );
        }
    }
    flagged
}

/// Coordinate-wise class means, one row per class id.
///
/// Classes without members get a zero row; nothing is ever displaced toward it.
pub fn class_centroids(x: &Array2<f64>, labels: &[usize], n_classes: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((n_classes, x.ncols()));
    let mut counts = vec![0usize; n_classes];
    for (row, &c) in x.rows().into_iter().zip(labels) {
        let mut acc = sums.row_mut(c);
        acc += &row;
        counts[c] += 1;
    }
    for (mut row, &count) in sums.rows_mut().into_iter().zip(&counts) {
        if count > 0 {
            row /= count as f64;
        }
    }
    sums
}

/// Everything the displacement pass needs, computed from the original data.
#[derive(Debug, Clone)]
pub struct DisplacementPlan {
    pub displaceable: BTreeSet<usize>,
    pub centroids: Array2<f64>,
    /// Mean neighbor distance of each displaceable point.
    pub phi: BTreeMap<usize, f64>,
    pub votes: Vec<NeighborVote>,
    pub k: usize,
}

impl DisplacementPlan {
    pub fn build(x: &Array2<f64>, labels: &[usize], n_classes: usize, config: &NdeConfig) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                x.nrows()
            )));
        }
        let nbrs = NeighborIndex::build(x, config.metric, config.k)?;
        Ok(Self::from_index(x, labels, n_classes, &nbrs, config))
    }

    pub fn from_index(
        x: &Array2<f64>,
        labels: &[usize],
        n_classes: usize,
        nbrs: &NeighborIndex,
        config: &NdeConfig,
    ) -> Self {
        let votes = neighbor_votes(labels, nbrs);
        let displaceable = identify_displaceable(labels, nbrs, config.augment_same_class_neighbors);
        let centroids = class_centroids(x, labels, n_classes);
        let phi = displaceable
            .iter()
            .map(|&i| (i, nbrs.mean_neighbor_distance(i)))
            .collect();
        Self {
            displaceable,
            centroids,
            phi,
            votes,
            k: nbrs.k(),
        }
    }

    /// Apply the plan to `x`, returning the displaced copy.
    pub fn apply(&self, x: &Array2<f64>, labels: &[usize]) -> Array2<f64> {
        let mut out = x.clone();
        for &i in &self.displaceable {
            let centroid = self.centroids.row(labels[i]);
            let toward: Array1<f64> = &centroid - &x.row(i);
            let s = toward.dot(&toward).sqrt();
            if s == 0.0 {
                continue;
            }
            let phi = self.phi[&i];
            let displaced = &centroid - &(toward / s * phi);
            out.row_mut(i).assign(&displaced);
        }
        out
    }
}

/// Displaced copy of `x`; labels and shape are unchanged.
///
/// Total for any `k >= 1` (clamped to `n - 1`); a single-row input is
/// returned unchanged.
pub fn displace(x: &Array2<f64>, labels: &[usize], n_classes: usize, config: &NdeConfig) -> Result<Array2<f64>> {
    if config.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if x.nrows() < 2 {
        return Ok(x.clone());
    }
    let plan = DisplacementPlan::build(x, labels, n_classes, config)?;
    Ok(plan.apply(x, labels))
}

pub fn nde(dataset: &Dataset, config: &NdeConfig) -> Result<Dataset> {
    let moved = displace(dataset.features(), dataset.labels(), dataset.n_classes(), config)?;
    dataset.with_features(moved)
}
