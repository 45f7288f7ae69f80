use ndarray::{Array2, ArrayView1};

use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Depth limit; the root is depth 0. `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// Minimum number of training rows in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree with Gini impurity and axis-aligned splits.
///
/// Candidate thresholds are midpoints between consecutive distinct values;
/// rows with `x[feature] <= threshold` go left. The split with the lowest
/// weighted child impurity wins, ties going to the lower feature index and
/// then the lower threshold. An impure node is split even when no split
/// lowers impurity, so XOR-like patterns can still be separated.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (class, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = class;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a Array2<f64>,
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in rows {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = rows.to_vec();
        for feature in 0..self.x.ncols() {
            let col = self.x.column(feature);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let total = self.counts(&order);
            let mut left = vec![0; self.n_classes];
            for pos in 0..n - 1 {
                let i = order[pos];
                left[self.y[i]] += 1;
                let (lo, hi) = (col[i], col[order[pos + 1]]);
                let n_left = pos + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity = (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left))
                    / n as f64;
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    // Adjacent floats: the midpoint rounds up to `hi`.
                    threshold = lo;
                }
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || depth_reached { None } else { self.best_split(rows) };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        if let Some((feature, threshold)) = split {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[[i, feature]] <= threshold);
            let left = self.grow(&l, depth + 1);
            let right = self.grow(&r, depth + 1);
            self.nodes[id] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

impl DecisionTree {
    /// Panics on an empty training set.
    pub fn fit(train: &Dataset, params: TreeParams) -> Self {
        assert!(train.n_samples() > 0, "a tree needs at least one training row");
        let mut builder = Builder {
            x: train.features(),
            y: train.labels(),
            n_classes: train.n_classes(),
            params,
            nodes: Vec::new(),
        };
        let rows: Vec<usize> = (0..train.n_samples()).collect();
        builder.grow(&rows, 0);
        Self { nodes: builder.nodes }
    }

    pub fn predict_one(&self, point: ArrayView1<'_, f64>) -> usize {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if point[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, points: &Array2<f64>) -> Vec<usize> {
        points.rows().into_iter().map(|p| self.predict_one(p)).collect()
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
