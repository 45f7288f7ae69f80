//! Distance metrics, full pairwise distance matrices and k-nearest-neighbor lists.
//!
//! The distance matrix is materialized in full (`n x n`), so memory grows
//! quadratically with the number of rows.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Exponent used when `minkowski` is requested without one.
pub const DEFAULT_MINKOWSKI_P: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Cityblock,
    Minkowski {
        p: f64,
    },
    /// `1 - cos(a, b)`; a zero vector is at distance 1 from any other vector.
    Cosine,
    /// Fraction of coordinates that differ exactly.
    Hamming,
}

impl DistanceMetric {
    /// The five metrics of the robustness sweep (minkowski with p = 3).
    pub const SWEEP: [DistanceMetric; 5] = [
        DistanceMetric::Euclidean,
        DistanceMetric::Cityblock,
        DistanceMetric::Minkowski {
            p: DEFAULT_MINKOWSKI_P,
        },
        DistanceMetric::Cosine,
        DistanceMetric::Hamming,
    ];

    pub fn minkowski(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(DistanceMetric::Minkowski { p })
        } else {
            Err(Error::InvalidArgument(format!(
                "minkowski exponent must be finite and > 0, got {p}"
            )))
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let pairs = a.iter().zip(b);
        match *self {
            DistanceMetric::Euclidean => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            DistanceMetric::Cityblock => pairs.map(|(x, y)| (x - y).abs()).sum(),
            DistanceMetric::Minkowski { p } if p.fract() == 0.0 && p <= 64.0 => pairs
                .map(|(x, y)| (x - y).abs().powi(p as i32))
                .sum::<f64>()
                .powf(1.0 / p),
            DistanceMetric::Minkowski { p } => pairs
                .map(|(x, y)| (x - y).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
            DistanceMetric::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in pairs {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return 1.0;
                }
                (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0)
            }
            DistanceMetric::Hamming => {
                if a.is_empty() {
                    return 0.0;
                }
                pairs.filter(|(x, y)| x != y).count() as f64 / a.len() as f64
            }
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceMetric::Euclidean => f.write_str("euclidean"),
            DistanceMetric::Cityblock => f.write_str("cityblock"),
            DistanceMetric::Minkowski { p } if *p == DEFAULT_MINKOWSKI_P => f.write_str("minkowski"),
            DistanceMetric::Minkowski { p } => write!(f, "minkowski:{p}"),
            DistanceMetric::Cosine => f.write_str("cosine"),
            DistanceMetric::Hamming => f.write_str("hamming"),
        }
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    /// Accepts `euclidean`, `cityblock` (or `manhattan`), `minkowski`,
    /// `minkowski:<p>`, `cosine`, `hamming`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "euclidean" | "eucledian" | "l2" => Ok(DistanceMetric::Euclidean),
            "cityblock" | "manhattan" | "l1" => Ok(DistanceMetric::Cityblock),
            "minkowski" => Ok(DistanceMetric::Minkowski {
                p: DEFAULT_MINKOWSKI_P,
            }),
            "cosine" => Ok(DistanceMetric::Cosine),
            "hamming" => Ok(DistanceMetric::Hamming),
            other => match other.strip_prefix("minkowski:") {
                Some(p) => {
                    let p: f64 = p.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad minkowski exponent {p:?}"))
                    })?;
                    DistanceMetric::minkowski(p)
                }
                None => Err(Error::InvalidArgument(format!("unknown distance metric {other:?}"))),
            },
        }
    }
}

/// `n x n` distances between the rows of `x`, with an exact zero diagonal.
///
/// Every metric here is symmetric bit for bit, so only the upper triangle is
/// computed and then mirrored.
pub fn pairwise_distances(x: &Array2<f64>, metric: DistanceMetric) -> Array2<f64> {
    let x = x.as_standard_layout();
    let n = x.nrows();
    let d = x.ncols();
    let flat = x.as_slice().expect("standard layout");
    let mut out = Array2::<f64>::zeros((n, n));
    let cells = out.as_slice_mut().expect("fresh array is contiguous");
    cells.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        let xi = &flat[i * d..(i + 1) * d];
        for (j, cell) in row.iter_mut().enumerate().skip(i + 1) {
            *cell = metric.distance(xi, &flat[j * d..(j + 1) * d]);
        }
    });
    for i in 1..n {
        for j in 0..i {
            cells[i * n + j] = cells[j * n + i];
        }
    }
    out
}

/// Order by distance, then by index.
#[inline]
pub(crate) fn by_distance_then_index(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Indices of the `k` smallest entries of `row` (skipping `exclude`), ascending
/// by distance with ties broken by lower index.
pub(crate) fn k_smallest(row: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let available = row.len() - usize::from(exclude.is_some_and(|e| e < row.len()));
    let k = k.min(available);
    if k == 0 {
        return Vec::new();
    }
    if k * 16 >= available {
        let mut cand: Vec<(f64, usize)> = row
            .iter()
            .copied()
            .enumerate()
            .filter(|&(j, _)| Some(j) != exclude)
            .map(|(j, v)| (v, j))
            .collect();
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, |a, b| by_distance_then_index(*a, *b));
            cand.truncate(k);
        }
        cand.sort_unstable_by(|a, b| by_distance_then_index(*a, *b));
        return cand.into_iter().map(|(_, j)| j).collect();
    }
    // Small k: one pass keeping a sorted buffer. Rows are visited in index
    // order, so an equal distance never displaces an earlier index.
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (j, &v) in row.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        if best.len() == k {
            if v.total_cmp(&best[k - 1].0) != Ordering::Less {
                continue;
            }
            best.pop();
        }
        let pos = best.partition_point(|&(d, _)| d.total_cmp(&v) != Ordering::Greater);
        best.insert(pos, (v, j));
    }
    best.into_iter().map(|(_, j)| j).collect()
}

/// Pairwise distances plus each row's nearest other rows.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    distances: Array2<f64>,
    neighbors: Vec<Vec<usize>>,
    k: usize,
    requested_k: usize,
}

impl NeighborIndex {
    pub fn build(x: &Array2<f64>, metric: DistanceMetric, k: usize) -> Result<Self> {
        knn_indices(pairwise_distances(x, metric), k)
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.distances
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn all_neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Neighbor count actually used, `min(requested, n - 1)`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    pub fn was_clamped(&self) -> bool {
        self.k != self.requested_k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Mean distance from row `i` to its neighbors.
    pub fn mean_neighbor_distance(&self, i: usize) -> f64 {
        let row = self.distances.row(i);
        let nbrs = &self.neighbors[i];
        nbrs.iter().map(|&j| row[j]).sum::<f64>() / nbrs.len() as f64
    }
}

/// Sort each row of `distances` and keep the `k` nearest other rows.
///
/// `k` is clamped to `n - 1` (a warning is logged); ties go to the lower index.
pub fn knn_indices(distances: Array2<f64>, k: usize) -> Result<NeighborIndex> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "distance matrix must be square, got {:?}",
            distances.dim()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::NoNeighbors(n));
    }
    let effective = k.min(n - 1);
    if effective != k {
        log::warn!("k = {k} exceeds the {} available neighbors; using k = {effective}", n - 1);
    }
    let distances = if distances.is_standard_layout() {
        distances
    } else {
        distances.as_standard_layout().into_owned()
    };
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = distances.row(i);
            k_smallest(row.as_slice().expect("standard layout"), effective, Some(i))
        })
        .collect();
    Ok(NeighborIndex {
        distances,
        neighbors,
        k: effective,
        requested_k: k,
    })
}
