//! Cleaning and undersampling by neighborhood: ENN, Tomek links, NearMiss-1.

use crate::dataset::Dataset;
use crate::geometry::{k_smallest, pairwise_distances, DistanceMetric, NeighborIndex};

use super::neighbor_count_failure;

/// Edited nearest neighbors.
///
/// A row is removed when some other class occurs strictly more often among
/// its `k` nearest neighbors than its own class does. Every class, the
/// majority included, is edited.
pub fn enn(dataset: &Dataset, k: usize) -> Result<Dataset, String> {
    let n = dataset.n_samples();
    if k == 0 {
        return Err("ENN needs k >= 1".into());
    }
    if n <= k {
        return Err(format!(
            "ENN needs more samples than neighbors: n_samples = {n}, n_neighbors = {k}"
        ));
    }
    let nbrs = NeighborIndex::build(dataset.features(), DistanceMetric::Euclidean, k)
        .map_err(|e| e.to_string())?;
    let labels = dataset.labels();
    let mut tally = vec![0usize; dataset.n_classes()];
    let keep: Vec<usize> = (0..n)
        .filter(|&i| {
            tally.iter_mut().for_each(|t| *t = 0);
            for &j in nbrs.neighbors(i) {
                tally[labels[j]] += 1;
            }
            let own = tally[labels[i]];
            tally
                .iter()
                .enumerate()
                .all(|(c, &t)| c == labels[i] || t <= own)
        })
        .collect();
    ensure_classes_survive(dataset, &keep)?;
    Ok(dataset.select(&keep))
}

fn ensure_classes_survive(dataset: &Dataset, keep: &[usize]) -> Result<(), String> {
    let before = dataset.class_counts();
    let mut after = vec![0usize; before.len()];
    for &i in keep {
        after[dataset.labels()[i]] += 1;
    }
    match (0..before.len()).find(|&c| before[c] > 0 && after[c] == 0) {
        Some(c) => Err(format!(
            "class eliminated by editing: class {:?} has no samples left",
            dataset.class_names()[c]
        )),
        None => Ok(()),
    }
}

/// Remove one member of every Tomek link: a pair of mutual nearest neighbors
/// with different labels. The member from the class with more rows goes;
/// on equal class sizes the member with the larger class id goes.
pub fn tomek_links(dataset: &Dataset) -> Result<Dataset, String> {
    let n = dataset.n_samples();
    if n < 2 {
        return Err(format!("Tomek links need at least 2 samples, got {n}"));
    }
    let nbrs = NeighborIndex::build(dataset.features(), DistanceMetric::Euclidean, 1)
        .map_err(|e| e.to_string())?;
    let labels = dataset.labels();
    let counts = dataset.class_counts();
    let mut drop = vec![false; n];
    for i in 0..n {
        let j = nbrs.neighbors(i)[0];
        if i < j && nbrs.neighbors(j)[0] == i && labels[i] != labels[j] {
            let (ci, cj) = (labels[i], labels[j]);
            let remove_i = (counts[ci], ci) > (counts[cj], cj);
            drop[if remove_i { i } else { j }] = true;
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !drop[i]).collect();
    Ok(dataset.select(&keep))
}

/// NearMiss-1.
///
/// Every class larger than the minority count keeps the rows whose mean
/// distance to their `k` nearest rows of other classes is smallest (ties to
/// the lower index), down to the minority count. Kept rows stay in order.
pub fn near_miss(dataset: &Dataset, k: usize) -> Result<Dataset, String> {
    if k == 0 {
        return Err("NearMiss needs k >= 1".into());
    }
    let members = dataset.class_members();
    let minority = members
        .iter()
        .map(Vec::len)
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let n = dataset.n_samples();
    for rows in &members {
        if rows.len() > minority && n - rows.len() < k {
            return Err(neighbor_count_failure(k, n - rows.len()));
        }
    }

    let distances = pairwise_distances(dataset.features(), DistanceMetric::Euclidean);
    let labels = dataset.labels();
    let mut keep = Vec::new();
    for (class, rows) in members.iter().enumerate() {
        if rows.len() <= minority {
            keep.extend_from_slice(rows);
            continue;
        }
        let mut scored: Vec<(f64, usize)> = rows
            .iter()
            .map(|&i| {
                let row = distances.row(i);
                let other: Vec<f64> = (0..n)
                    .filter(|&j| labels[j] != class)
                    .map(|j| row[j])
                    .collect();
                let nearest = k_smallest(&other, k, None);
                let mean = nearest.iter().map(|&j| other[j]).sum::<f64>() / k as f64;
                (mean, i)
            })
            .collect();
        scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keep.extend(scored.iter().take(minority).map(|&(_, i)| i));
    }
    keep.sort_unstable();
    Ok(dataset.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn blobs() -> Dataset {
        let features = array![
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [0.1, 0.1],
            [10.0, 10.0],
            [10.1, 10.0],
            [10.0, 10.1],
            [10.1, 10.1]
        ];
        Dataset::from_labels(features, &["a", "a", "a", "a", "b", "b", "b", "b"]).unwrap()
    }

    #[test]
    fn enn_keeps_clean_data() {
        let ds = blobs();
        assert_eq!(enn(&ds, 3).unwrap(), ds);
    }

    #[test]
    fn enn_removes_isolated_point() {
        // One B point inside a ring of A points; a second B cluster far away.
        let features = array![
            [0.0, 0.0],
            [1.0, 0.0],
            [-1.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [20.0, 20.0],
            [20.5, 20.0],
            [20.0, 20.5]
        ];
        let ds = Dataset::from_labels(features, &["b", "a", "a", "a", "a", "b", "b", "b"]).unwrap();
        let out = enn(&ds, 3).unwrap();
        assert_eq!(out.n_samples(), 7);
        assert!(out.features().rows().into_iter().all(|r| r.to_vec() != vec![0.0, 0.0]));
    }

    #[test]
    fn enn_precondition_and_elimination() {
        let tiny = Dataset::from_labels(array![[0.0], [1.0]], &["a", "b"]).unwrap();
        assert!(enn(&tiny, 3).unwrap_err().contains("n_samples = 2"));

        let lone = Dataset::from_labels(array![[0.0], [1.0], [2.0], [3.0], [1.5]], &["a", "a", "a", "a", "b"])
            .unwrap();
        assert!(enn(&lone, 3).unwrap_err().contains("class eliminated by editing"));
    }

    #[test]
    fn tomek_no_links_between_separated_blobs() {
        let ds = blobs();
        assert_eq!(tomek_links(&ds).unwrap(), ds);
    }

    #[test]
    fn tomek_removes_larger_class_member() {
        let features = array![
            [0.0, 0.0],
            [0.1, 0.0],
            [5.0, 5.0],
            [5.0, 5.2],
            [-5.0, -5.0],
            [-5.0, -5.2],
            [5.0, 5.4]
        ];
        // Class A has 4 rows, class B 3; only (0, 1) is a link.
        let ds = Dataset::from_labels(features, &["A", "B", "A", "A", "B", "B", "A"]).unwrap();
        let out = tomek_links(&ds).unwrap();
        assert_eq!(out.n_samples(), 6);
        assert_eq!(out.row(0).to_vec(), vec![0.1, 0.0]);
        assert_eq!(out.labels()[0], 1);
    }

    #[test]
    fn tomek_tie_removes_larger_class_id() {
        let features = array![[0.0], [0.1], [9.0], [9.5]];
        let ds = Dataset::from_labels(features, &["A", "B", "A", "B"]).unwrap();
        let out = tomek_links(&ds).unwrap();
        // Pairs (0,1) and (2,3) are both links; the B members (id 1) go.
        assert_eq!(out.labels(), [0, 0]);
        assert_eq!(out.features(), &array![[0.0], [9.0]]);
    }

    #[test]
    fn near_miss_keeps_points_nearest_other_class() {
        // A points spread along the x axis, B cluster near x = 0.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.extend([i as f64, 1.0]);
            labels.push("A");
        }
        for i in 0..3 {
            rows.extend([i as f64 * 0.1, 0.0]);
            labels.push("B");
        }
        let ds = Dataset::from_labels(Array2::from_shape_vec((13, 2), rows).unwrap(), &labels).unwrap();
        let out = near_miss(&ds, 1).unwrap();
        assert_eq!(out.class_counts(), [3, 3]);
        let kept_a: Vec<f64> = (0..out.n_samples())
            .filter(|&i| out.labels()[i] == 0)
            .map(|i| out.row(i)[0])
            .collect();
        assert_eq!(kept_a, [0.0, 1.0, 2.0]);
    }

    #[test]
    fn near_miss_balanced_and_failure() {
        let ds = blobs();
        assert_eq!(near_miss(&ds, 3).unwrap(), ds);
        let ds = Dataset::from_labels(array![[0.0], [1.0], [2.0], [5.0]], &["a", "a", "a", "b"]).unwrap();
        let err = near_miss(&ds, 3).unwrap_err();
        assert!(err.contains("n_neighbors <= n_samples_fit"), "{err}");
    }
}
