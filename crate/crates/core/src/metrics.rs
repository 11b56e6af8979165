//! Closed-form robustness of a single prediction.
//!
//! Both scores depend only on the most and second most likely class under
//! the model's distribution:
//!
//! * `r_star = p(y1) / p(y2)`, the top-two odds ratio, in `[1, +inf]`;
//! * `r_cor = (p(y1) - p(y2)) / p(y1)`, the top-two probability gap
//!   relative to the winner, in `[0, 1]`.
//!
//! They are monotone transformations of each other (`r_cor = 1 - 1/r_star`)
//! and therefore induce the same ordering over instances. The same formulas
//! applied to unnormalized joint masses give identical `r_cor` — Bayes'
//! rule cancels the normalizer — which is what [`robustness_from_joint`]
//! exploits.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest allowed deviation of a probability vector's sum from 1.
///
/// Out-of-tolerance input is rejected, never renormalized: silent repair
/// would change robustness scores invisibly.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// A conditional class-probability vector `p(.|x)` for one instance.
///
/// Validated on construction: at least two classes, every entry in
/// `[0, 1]`, entries summing to 1 within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class distribution needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "probability for class {i} is {p}, outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, more than {SUM_TOLERANCE} away from 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of classes.
    pub fn class_count(&self) -> usize {
        self.probs.len()
    }

    /// Index of the most likely class (ties broken by lowest index).
    pub fn argmax(&self) -> usize {
        top_two_indices(&self.probs).0
    }
}

impl TryFrom<Vec<f64>> for ClassDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        ClassDistribution::new(probs)
    }
}

impl From<ClassDistribution> for Vec<f64> {
    fn from(dist: ClassDistribution) -> Self {
        dist.probs
    }
}

/// Robustness of one prediction, in both parametrizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessScore {
    /// Relative top-two probability gap, in `[0, 1]`.
    pub r_cor: f64,
    /// Top-two probability ratio, in `[1, +inf]`.
    pub r_star: f64,
    /// Most likely class.
    pub top: usize,
    /// Second most likely class.
    pub runner_up: usize,
}

/// Indices of the largest and second largest entries, ties broken by
/// lowest index. Requires `values.len() >= 2`.
fn top_two_indices(values: &[f64]) -> (usize, usize) {
    debug_assert!(values.len() >= 2);
    let (mut top, mut runner) = (0usize, usize::MAX);
    let mut best = values[0];
    let mut second = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best {
            (second, runner) = (best, top);
            (best, top) = (v, i);
        } else if v > second {
            (second, runner) = (v, i);
        }
    }
    (top, runner)
}

/// The most and second most likely class of a distribution.
pub fn top_two(dist: &ClassDistribution) -> (usize, usize) {
    top_two_indices(dist.probs())
}

/// Full robustness score of the prediction `argmax p(.|x)`.
pub fn robustness(dist: &ClassDistribution) -> RobustnessScore {
    score_from_values(dist.probs()).expect("validated distribution")
}

/// `r_cor` of the prediction: `(p(y1) - p(y2)) / p(y1)`.
pub fn robustness_cor(dist: &ClassDistribution) -> f64 {
    robustness(dist).r_cor
}

/// `r_star` of the prediction: `p(y1) / p(y2)`, `+inf` when `p(y2) = 0`.
pub fn robustness_star(dist: &ClassDistribution) -> f64 {
    robustness(dist).r_star
}

/// Robustness from unnormalized joint masses `p(y, x)` at a fixed `x`.
///
/// Gives the same scores as [`robustness`] on the corresponding
/// conditional: the ratio and the relative gap are scale-free.
pub fn robustness_from_joint(weights: &[f64]) -> Result<RobustnessScore> {
    if weights.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "joint column needs at least 2 classes, got {}",
            weights.len()
        )));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidInput(format!(
                "joint mass for class {i} is {w}, not a finite non-negative value"
            )));
        }
    }
    score_from_values(weights)
}

fn score_from_values(values: &[f64]) -> Result<RobustnessScore> {
    let (top, runner_up) = top_two_indices(values);
    let (p1, p2) = (values[top], values[runner_up]);
    if p1 <= 0.0 {
        return Err(Error::InvalidInput(
            "all class masses are zero".to_string(),
        ));
    }
    let r_star = if p2 == 0.0 { f64::INFINITY } else { p1 / p2 };
    Ok(RobustnessScore {
        r_cor: (p1 - p2) / p1,
        r_star,
        top,
        runner_up,
    })
}

/// Convert `r_star` to `r_cor`: `1 - 1/r_star`, with `+inf -> 1`.
pub fn star_to_cor(r_star: f64) -> Result<f64> {
    if r_star.is_nan() || r_star < 1.0 {
        return Err(Error::InvalidInput(format!(
            "r_star must be >= 1, got {r_star}"
        )));
    }
    Ok(if r_star.is_infinite() {
        1.0
    } else {
        1.0 - 1.0 / r_star
    })
}

/// Convert `r_cor` to `r_star`: `1 / (1 - r_cor)`, with `1 -> +inf`.
pub fn cor_to_star(r_cor: f64) -> Result<f64> {
    if r_cor.is_nan() || !(0.0..=1.0).contains(&r_cor) {
        return Err(Error::InvalidInput(format!(
            "r_cor must be in [0, 1], got {r_cor}"
        )));
    }
    Ok(if r_cor == 1.0 {
        f64::INFINITY
    } else {
        1.0 / (1.0 - r_cor)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(probs: &[f64]) -> ClassDistribution {
        ClassDistribution::new(probs.to_vec()).unwrap()
    }

    #[test]
    fn top_two_orders_by_probability() {
        assert_eq!(top_two(&dist(&[0.6, 0.3, 0.1])), (0, 1));
        assert_eq!(top_two(&dist(&[0.1, 0.2, 0.7])), (2, 1));
    }

    #[test]
    fn top_two_breaks_ties_by_lowest_index() {
        let third = 1.0 / 3.0;
        assert_eq!(top_two(&dist(&[third, third, third])), (0, 1));
        assert_eq!(top_two(&dist(&[0.2, 0.4, 0.4])), (1, 2));
    }

    #[test]
    fn rejects_single_class() {
        assert!(ClassDistribution::new(vec![1.0]).is_err());
        assert!(ClassDistribution::new(vec![]).is_err());
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(ClassDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(ClassDistribution::new(vec![0.5, f64::NAN]).is_err());
    }

    #[test]
    fn sum_tolerance_is_enforced_not_repaired() {
        assert!(ClassDistribution::new(vec![0.5, 0.48]).is_err());
        // Within tolerance is accepted as-is.
        let d = ClassDistribution::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        assert_eq!(d.probs()[1], 0.5 + 5e-7);
    }

    #[test]
    fn r_cor_examples() {
        assert_abs_diff_eq!(robustness_cor(&dist(&[0.6, 0.3, 0.1])), 0.5);
        let third = 1.0 / 3.0;
        assert_eq!(robustness_cor(&dist(&[third, third, third])), 0.0);
        assert_eq!(robustness_cor(&dist(&[1.0, 0.0])), 1.0);
    }

    #[test]
    fn r_star_examples() {
        assert_abs_diff_eq!(robustness_star(&dist(&[0.6, 0.3, 0.1])), 2.0);
        let third = 1.0 / 3.0;
        assert_eq!(robustness_star(&dist(&[third, third, third])), 1.0);
        assert_eq!(robustness_star(&dist(&[1.0, 0.0])), f64::INFINITY);
    }

    #[test]
    fn star_to_cor_examples() {
        assert_eq!(star_to_cor(2.0).unwrap(), 0.5);
        assert_eq!(star_to_cor(1.0).unwrap(), 0.0);
        assert_eq!(star_to_cor(f64::INFINITY).unwrap(), 1.0);
        assert!(star_to_cor(0.9).is_err());
        assert!(star_to_cor(f64::NAN).is_err());
    }

    #[test]
    fn cor_to_star_examples() {
        assert_eq!(cor_to_star(0.5).unwrap(), 2.0);
        assert_eq!(cor_to_star(0.0).unwrap(), 1.0);
        assert_eq!(cor_to_star(1.0).unwrap(), f64::INFINITY);
        assert!(cor_to_star(-0.1).is_err());
        assert!(cor_to_star(1.1).is_err());
    }

    #[test]
    fn joint_form_rejects_bad_weights() {
        assert!(robustness_from_joint(&[1.0]).is_err());
        assert!(robustness_from_joint(&[0.3, -0.1]).is_err());
        assert!(robustness_from_joint(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn joint_form_handles_zero_runner_up() {
        let s = robustness_from_joint(&[0.4, 0.0, 0.0]).unwrap();
        assert_eq!(s.r_star, f64::INFINITY);
        assert_eq!(s.r_cor, 1.0);
    }

    prop_compose! {
        /// Random distribution over 2..=6 classes via normalized Exp(1) draws.
        fn arb_dist()(k in 2usize..=6, raw in prop::collection::vec(1e-12f64..1.0, 6)) -> ClassDistribution {
            let weights: Vec<f64> = raw[..k].iter().map(|u| -u.ln()).collect();
            let sum: f64 = weights.iter().sum();
            ClassDistribution::new(weights.iter().map(|w| w / sum).collect()).unwrap()
        }
    }

    proptest! {
        #[test]
        fn scores_stay_in_range(d in arb_dist()) {
            let s = robustness(&d);
            prop_assert!((0.0..=1.0).contains(&s.r_cor));
            prop_assert!(s.r_star >= 1.0);
            prop_assert!(s.top != s.runner_up);
        }

        #[test]
        fn conversions_round_trip(d in arb_dist()) {
            let s = robustness(&d);
            prop_assert!((star_to_cor(s.r_star).unwrap() - s.r_cor).abs() <= 1e-12);
            if s.r_star.is_finite() {
                let back = star_to_cor(cor_to_star(s.r_cor).unwrap()).unwrap();
                prop_assert!((back - s.r_cor).abs() <= 1e-12);
            }
        }

        #[test]
        fn orderings_agree(a in arb_dist(), b in arb_dist()) {
            let (sa, sb) = (robustness(&a), robustness(&b));
            prop_assert_eq!(sa.r_cor < sb.r_cor, sa.r_star < sb.r_star);
            prop_assert_eq!(sa.r_cor > sb.r_cor, sa.r_star > sb.r_star);
        }

        #[test]
        fn permutation_equivariance(d in arb_dist(), rot in 0usize..6) {
            let k = d.class_count();
            let rot = rot % k;
            // Rotate class indices by `rot`.
            let mut probs = vec![0.0; k];
            for (i, &p) in d.probs().iter().enumerate() {
                probs[(i + rot) % k] = p;
            }
            let rotated = ClassDistribution::new(probs).unwrap();
            let (s, sr) = (robustness(&d), robustness(&rotated));
            prop_assert_eq!(s.r_cor.to_bits(), sr.r_cor.to_bits());
            prop_assert_eq!(s.r_star.to_bits(), sr.r_star.to_bits());
            // The top two map through the rotation unless equal entries force
            // the lowest-index tie-break to pick differently.
            let mut sorted = d.probs().to_vec();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).all(|w| w[0] != w[1]) {
                prop_assert_eq!((s.top + rot) % k, sr.top);
                prop_assert_eq!((s.runner_up + rot) % k, sr.runner_up);
            }
        }

        #[test]
        fn joint_and_conditional_forms_agree(d in arb_dist(), scale in 1e-6f64..1e6) {
            let weights: Vec<f64> = d.probs().iter().map(|p| p * scale).collect();
            let joint = robustness_from_joint(&weights).unwrap();
            let cond = robustness(&d);
            prop_assert_eq!(joint.top, cond.top);
            prop_assert_eq!(joint.runner_up, cond.runner_up);
            prop_assert!((joint.r_cor - cond.r_cor).abs() <= 1e-12);
        }
    }
}
