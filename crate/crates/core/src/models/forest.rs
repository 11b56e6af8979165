//! CART-style random forest.
//!
//! Each tree is grown on a bootstrap sample with Gini splits over a random
//! sqrt(d) feature subset per node. Tree `t` derives its RNG from
//! `seed + t`, so forests are reproducible and trees could be grown
//! independently. Forest probabilities are the unweighted mean of the
//! per-tree leaf distributions (leaf counts Laplace-smoothed with
//! alpha = 1).

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::class_counts;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        probs: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: ArrayView1<f64>) -> &[f64] {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf { probs } => return probs,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    class_count: usize,
    feature_count: usize,
    trees: Vec<Tree>,
}

impl ForestModel {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn fit(
        features: ArrayView2<f64>,
        labels: &[usize],
        class_count: usize,
        tree_count: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
        seed: u64,
    ) -> Self {
        let n = features.nrows();
        let d = features.ncols();
        let feature_sample = ((d as f64).sqrt().floor() as usize).max(1);
        let trees = (0..tree_count)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut builder = TreeBuilder {
                    features,
                    labels,
                    class_count,
                    max_depth,
                    min_leaf,
                    feature_sample,
                    nodes: Vec::new(),
                };
                builder.grow(sample, 0, &mut rng);
                Tree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        Self {
            class_count,
            feature_count: d,
            trees,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub(super) fn predict_row(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let mut acc = vec![0.0; self.class_count];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict(row)) {
                *a += p;
            }
        }
        let inv = 1.0 / self.trees.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        acc
    }
}

struct TreeBuilder<'f, 'l> {
    features: ArrayView2<'f, f64>,
    labels: &'l [usize],
    class_count: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    feature_sample: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_, '_> {
    /// Grows the subtree for `indices`, returning its node id.
    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let node_labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let counts = class_counts(&node_labels, self.class_count);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || indices.len() < 2 * self.min_leaf {
            return self.push_leaf(&counts, indices.len());
        }

        match self.best_split(&indices, &counts, rng) {
            None => self.push_leaf(&counts, indices.len()),
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.features[(i, feature)] <= threshold);
                let node = self.nodes.len();
                self.nodes.push(Node::Leaf { probs: Vec::new() }); // placeholder
                let left = self.grow(left_idx, depth + 1, rng);
                let right = self.grow(right_idx, depth + 1, rng);
                self.nodes[node] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                node
            }
        }
    }

    fn push_leaf(&mut self, counts: &[usize], n: usize) -> usize {
        let probs = counts
            .iter()
            .map(|&c| (c + 1) as f64 / (n + self.class_count) as f64)
            .collect();
        self.nodes.push(Node::Leaf { probs });
        self.nodes.len() - 1
    }

    /// Best Gini split over a random feature subset, or `None` when no
    /// split strictly reduces impurity while respecting `min_leaf`.
    fn best_split(
        &self,
        indices: &[usize],
        parent_counts: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<(usize, f64)> {
        let n = indices.len();
        let parent_score = weighted_gini(parent_counts, n);

        let mut candidates: Vec<usize> = (0..self.features.ncols()).collect();
        let (sampled, _) = candidates.partial_shuffle(rng, self.feature_sample);

        let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
        for &feature in sampled.iter() {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.features[(a, feature)]
                    .total_cmp(&self.features[(b, feature)])
                    .then(a.cmp(&b))
            });
            let mut left_counts = vec![0usize; self.class_count];
            let mut right_counts = parent_counts.to_vec();
            for split in 1..n {
                let moved = self.labels[order[split - 1]];
                left_counts[moved] += 1;
                right_counts[moved] -= 1;
                let (lo, hi) = (
                    self.features[(order[split - 1], feature)],
                    self.features[(order[split], feature)],
                );
                if lo == hi || split < self.min_leaf || n - split < self.min_leaf {
                    continue;
                }
                let score = weighted_gini(&left_counts, split) + weighted_gini(&right_counts, n - split);
                if best.is_none_or(|(s, _, _)| score < s) && score < parent_score - 1e-12 {
                    // Midpoint threshold, falling back to the lower value if
                    // rounding would push it onto the right side.
                    let mid = 0.5 * (lo + hi);
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

/// Gini impurity scaled by the sample count, so parent/child scores are
/// comparable by plain sums.
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 * (1.0 - sum_sq / (n * n) as f64)
}
