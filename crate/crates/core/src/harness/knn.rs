use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::geometry::{k_smallest, DistanceMetric};

/// Brute-force k-nearest-neighbor classifier.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
    metric: DistanceMetric,
}

impl KnnClassifier {
    /// `k` is clamped to the number of training rows. Panics on an empty
    /// training set or `k == 0`.
    pub fn fit(train: &Dataset, k: usize, metric: DistanceMetric) -> Self {
        assert!(train.n_samples() > 0, "kNN needs at least one training row");
        assert!(k > 0, "kNN needs k >= 1");
        Self {
            features: train.features().clone(),
            labels: train.labels().to_vec(),
            n_classes: train.n_classes(),
            k: k.min(train.n_samples()),
            metric,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority vote among the `k` nearest training rows. Distance ties go
    /// to the lower training index, vote ties to the smaller class id.
    pub fn predict_one(&self, point: ArrayView1<'_, f64>) -> usize {
        let point = point.to_vec();
        let distances: Vec<f64> = self
            .features
            .rows()
            .into_iter()
            .map(|row| self.metric.distance(&point, row.as_slice().expect("standard layout")))
            .collect();
        let mut votes = vec![0usize; self.n_classes];
        for j in k_smallest(&distances, self.k, None) {
            votes[self.labels[j]] += 1;
        }
        let mut best = 0;
        for (class, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = class;
            }
        }
        best
    }

    pub fn predict(&self, points: &Array2<f64>) -> Vec<usize> {
        (0..points.nrows())
            .into_par_iter()
            .map(|i| self.predict_one(points.row(i)))
            .collect()
    }
}

/// Fit on `train` and predict `test_points` in one call.
pub fn knn_classify(train: &Dataset, test_points: &Array2<f64>, k: usize, metric: DistanceMetric) -> Vec<usize> {
    KnnClassifier::fit(train, k, metric).predict(test_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SYNTHETIC_CENTERS};
    use ndarray::array;

    #[test]
    fn exact_match_with_one_neighbor() {
        let train = Dataset::from_labels(array![[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], &["a", "b", "c"]).unwrap();
        let pred = knn_classify(&train, &array![[1.0, 1.0], [2.0, 0.0]], 1, DistanceMetric::Euclidean);
        assert_eq!(pred, [1, 2]);
    }

    #[test]
    fn vote_tie_goes_to_smaller_class_id() {
        // Class "b" appears first, so it gets id 0.
        let train = Dataset::from_labels(array![[1.0], [-1.0]], &["b", "a"]).unwrap();
        let pred = knn_classify(&train, &array![[0.0]], 2, DistanceMetric::Euclidean);
        assert_eq!(pred, [0]);
        let train = Dataset::from_labels(array![[-1.0], [1.0]], &["b", "a"]).unwrap();
        assert_eq!(knn_classify(&train, &array![[0.0]], 2, DistanceMetric::Euclidean), [0]);
    }

    #[test]
    fn k_clamped_to_training_size() {
        let train = Dataset::from_labels(array![[0.0], [1.0], [5.0]], &["a", "a", "b"]).unwrap();
        let model = KnnClassifier::fit(&train, 10, DistanceMetric::Euclidean);
        assert_eq!(model.k(), 3);
        assert_eq!(model.predict(&array![[5.0]]), [0]);
    }

    #[test]
    fn blob_centers_recovered() {
        let train = generate_synthetic(3, &[40, 40, 40], 0.5).unwrap();
        let centers = Array2::from_shape_fn((3, 2), |(i, j)| SYNTHETIC_CENTERS[i][j]);
        assert_eq!(knn_classify(&train, &centers, 5, DistanceMetric::Euclidean), [0, 1, 2]);
    }
}
