//! Gaussian naive Bayes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::class_counts;

const LN_2PI: f64 = 1.8378770664093453;

/// Per-class Gaussian feature densities with Laplace-smoothed priors.
#[derive(Debug, Clone)]
pub struct GaussianNbModel {
    class_count: usize,
    feature_count: usize,
    log_priors: Array1<f64>,
    means: Array2<f64>,
    variances: Array2<f64>,
}

impl GaussianNbModel {
    pub(super) fn fit(
        features: ArrayView2<f64>,
        labels: &[usize],
        class_count: usize,
        variance_floor: f64,
    ) -> Self {
        let (n, d) = features.dim();
        let counts = class_counts(labels, class_count);

        // Classes absent from this training slice fall back to the global
        // feature moments instead of a spuriously tight density at zero.
        let global_mean: Array1<f64> = features.mean_axis(ndarray::Axis(0)).expect("n > 0");
        let mut global_var = Array1::zeros(d);
        for row in features.rows() {
            for j in 0..d {
                let diff = row[j] - global_mean[j];
                global_var[j] += diff * diff;
            }
        }
        global_var.mapv_inplace(|v| v / n as f64);

        let mut means = Array2::zeros((class_count, d));
        let mut variances = Array2::zeros((class_count, d));
        for (row, &label) in features.rows().into_iter().zip(labels) {
            for j in 0..d {
                means[(label, j)] += row[j];
            }
        }
        for c in 0..class_count {
            if counts[c] == 0 {
                means.row_mut(c).assign(&global_mean);
            } else {
                let inv = 1.0 / counts[c] as f64;
                means.row_mut(c).mapv_inplace(|v| v * inv);
            }
        }
        for (row, &label) in features.rows().into_iter().zip(labels) {
            for j in 0..d {
                let diff = row[j] - means[(label, j)];
                variances[(label, j)] += diff * diff;
            }
        }
        for c in 0..class_count {
            if counts[c] == 0 {
                variances.row_mut(c).assign(&global_var);
            } else {
                let inv = 1.0 / counts[c] as f64;
                variances.row_mut(c).mapv_inplace(|v| v * inv);
            }
            variances.row_mut(c).mapv_inplace(|v| v + variance_floor);
        }

        let log_priors = Array1::from_iter(
            counts
                .iter()
                .map(|&c| (((c + 1) as f64) / ((n + class_count) as f64)).ln()),
        );
        Self {
            class_count,
            feature_count: d,
            log_priors,
            means,
            variances,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub(super) fn predict_row(&self, row: ArrayView1<f64>) -> Vec<f64> {
        let mut log_post = vec![0.0; self.class_count];
        for (c, lp) in log_post.iter_mut().enumerate() {
            *lp = self.log_priors[c];
            for j in 0..self.feature_count {
                let var = self.variances[(c, j)];
                let diff = row[j] - self.means[(c, j)];
                *lp += -0.5 * (LN_2PI + var.ln()) - diff * diff / (2.0 * var);
            }
        }
        softmax(&log_post)
    }
}

/// Exponentiates shifted log scores and normalizes to an exact unit sum.
pub(super) fn softmax(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    probs
}
