//! k-nearest-neighbour classifier.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Stores the training set verbatim; queries vote among the k nearest rows
/// by squared Euclidean distance, ties broken by training index.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    class_count: usize,
    train: Array2<f64>,
    labels: Vec<usize>,
}

impl KnnModel {
    pub(super) fn fit(
        features: ArrayView2<f64>,
        labels: &[usize],
        class_count: usize,
        k: usize,
    ) -> Result<Self> {
        if k > features.nrows() {
            return Err(Error::InvalidInput(format!(
                "k = {k} exceeds the {} training rows",
                features.nrows()
            )));
        }
        Ok(Self {
            k,
            class_count,
            train: features.to_owned(),
            labels: labels.to_vec(),
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.train.ncols()
    }

    pub(super) fn predict_row(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let mut dists: Vec<(f64, usize)> = self
            .train
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, train_row)| {
                let d2 = train_row
                    .iter()
                    .zip(row.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (d2, i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes = vec![0usize; self.class_count];
        for &(_, i) in dists.iter().take(self.k) {
            votes[self.labels[i]] += 1;
        }
        // Laplace alpha = 1
        votes
            .iter()
            .map(|&v| (v + 1) as f64 / (self.k + self.class_count) as f64)
            .collect()
    }
}
