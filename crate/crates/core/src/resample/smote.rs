use ndarray::Array2;

use crate::dataset::Dataset;
use crate::geometry::{DistanceMetric, NeighborIndex};
use crate::rng::DetRng;

use super::neighbor_count_failure;

/// Synthetic minority oversampling by linear interpolation.
///
/// Each class below the majority count gets `majority - count` new rows
/// `x + u * (y - x)`, where `x` is a uniformly drawn member, `y` one of its
/// `k` nearest same-class neighbors (Euclidean) and `u ~ U[0, 1)`. A class
/// that needs rows must have more than `k` members.
pub fn smote(dataset: &Dataset, k: usize, rng: &mut DetRng) -> Result<Dataset, String> {
    if k == 0 {
        return Err("SMOTE needs k >= 1".into());
    }
    let members = dataset.class_members();
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);

    // Check every class before drawing anything.
    for rows in &members {
        if !rows.is_empty() && rows.len() < majority && rows.len() <= k {
            return Err(neighbor_count_failure(k + 1, rows.len()));
        }
    }

    let d = dataset.n_features();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (class, rows) in members.iter().enumerate() {
        if rows.is_empty() || rows.len() >= majority {
            continue;
        }
        let local = dataset.select(rows);
        let nbrs = NeighborIndex::build(local.features(), DistanceMetric::Euclidean, k)
            .map_err(|e| e.to_string())?;
        for _ in rows.len()..majority {
            let seed = rng.below(rows.len());
            let nb = nbrs.neighbors(seed)[rng.below(nbrs.k())];
            let gap = rng.uniform();
            let x = local.row(seed);
            let y = local.row(nb);
            values.extend(x.iter().zip(y.iter()).map(|(a, b)| a + gap * (b - a)));
            labels.push(class);
        }
    }
    let synthetic = Array2::from_shape_vec((labels.len(), d), values).expect("row-major synthetic rows");
    dataset.append(&synthetic, &labels).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn synthetic_points_lie_on_segment() {
        let features = array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [5.0, 6.0], [6.0, 5.0], [6.0, 6.0], [5.5, 5.5]];
        let ds = Dataset::from_labels(features, &["a", "a", "b", "b", "b", "b", "b"]).unwrap();
        let out = smote(&ds, 1, &mut DetRng::seed_from(4)).unwrap();
        assert_eq!(out.class_counts(), [5, 5]);
        for i in 7..10 {
            let row = out.row(i);
            assert_eq!(row[0], row[1]);
            assert!((0.0..=1.0).contains(&row[0]));
        }
    }

    #[test]
    fn balances_counts() {
        let n = 26;
        let features = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 + i as f64 * 0.01);
        let labels: Vec<&str> = (0..n).map(|i| if i < 6 { "A" } else { "B" }).collect();
        let ds = Dataset::from_labels(features, &labels).unwrap();
        let out = smote(&ds, 5, &mut DetRng::seed_from(1)).unwrap();
        assert_eq!(out.class_counts(), [20, 20]);
        assert_eq!(out.select(&(0..26).collect::<Vec<_>>()), ds);
    }

    #[test]
    fn too_small_minority_fails_with_neighbor_message() {
        let features = Array2::from_shape_fn((14, 1), |(i, _)| i as f64);
        let labels: Vec<&str> = (0..14).map(|i| if i < 4 { "m" } else { "M" }).collect();
        let ds = Dataset::from_labels(features, &labels).unwrap();
        let err = smote(&ds, 5, &mut DetRng::seed_from(1)).unwrap_err();
        assert!(err.contains("Expected n_neighbors <= n_samples_fit"), "{err}");
        assert!(err.contains("n_neighbors = 6"), "{err}");
        assert!(err.contains("n_samples_fit = 4"), "{err}");
    }

    #[test]
    fn small_majority_is_fine() {
        let ds = Dataset::from_labels(array![[0.0], [1.0]], &["a", "b"]).unwrap();
        assert_eq!(smote(&ds, 5, &mut DetRng::seed_from(1)).unwrap(), ds);
    }
}
