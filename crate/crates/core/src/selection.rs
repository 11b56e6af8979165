//! Robustness-routed dynamic selection between two models.
//!
//! Given the best validation model M1 and the runner-up M2, every instance
//! gets the ratio `r2(x) / r1(x)` of the two predictions' robustness
//! scores. Instances whose ratio exceeds a threshold `t` are answered by
//! M2, the rest by M1 (strict inequality, so `t = +inf` is exactly the
//! single-best baseline).
//!
//! The two fitting strategies differ only in how `t` is chosen on the
//! validation set:
//!
//! * RS-D (direct) maximizes the combined routed accuracy;
//! * RS-I (indirect) maximizes M2's accuracy advantage over M1 on the
//!   routed tail, falling back to `t = +inf` when no tail has a positive
//!   advantage.
//!
//! Candidate thresholds are midpoints between adjacent distinct observed
//! ratios plus a below-everything and an above-everything sentinel, which
//! covers every achievable routing partition exactly once. Accuracy (or
//! gain) ties resolve to the largest threshold, i.e. conservatively toward
//! M1.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::metrics;
use crate::models::PredictionTable;
use crate::{Error, Result};

/// How the routing threshold was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    RsD,
    RsI,
    SingleBest,
}

/// A fitted routing rule between an ordered model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub strategy: Strategy,
    /// Model with the higher validation accuracy.
    pub m1_id: String,
    /// Runner-up model.
    pub m2_id: String,
    /// Route to M2 when `ratio > threshold`.
    #[serde(with = "extended_real")]
    pub threshold: f64,
    /// Robustness metric the ratio is computed from. Always `r_cor` here;
    /// recorded so policy files are self-describing (`r_star` would induce
    /// the same ordering but different threshold values).
    #[serde(default = "default_ratio_metric")]
    pub ratio_metric: String,
}

fn default_ratio_metric() -> String {
    "r_cor".to_string()
}

impl SelectionPolicy {
    /// The single-best baseline: M2 is never used.
    pub fn single_best(m1_id: impl Into<String>, m2_id: impl Into<String>) -> Self {
        Self {
            strategy: Strategy::SingleBest,
            m1_id: m1_id.into(),
            m2_id: m2_id.into(),
            threshold: f64::INFINITY,
            ratio_metric: default_ratio_metric(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("bad policy json: {e}")))
    }
}

/// Threshold serialization: finite values as numbers, the infinities as the
/// strings "inf" / "-inf".
mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = if v.is_finite() {
            Repr::Num(*v)
        } else if *v > 0.0 {
            Repr::Str("inf".to_string())
        } else {
            Repr::Str("-inf".to_string())
        };
        repr.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) if v.is_nan() => Err(serde::de::Error::custom("threshold is NaN")),
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "bad threshold string {other:?}"
                ))),
            },
        }
    }
}

/// One routed test prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedPrediction {
    pub instance_id: String,
    pub chosen_model: String,
    pub predicted_class: usize,
    /// `r2 / r1` at this instance.
    pub ratio: f64,
}

/// Ratio of the two models' `r_cor` scores on the same instance.
///
/// Conventions at zero robustness: `0/0 -> 1` (both models sit on a
/// prediction tie, no evidence either way) and `r2/0 -> +inf` for positive
/// `r2`.
pub fn robustness_ratio(r1: f64, r2: f64) -> Result<f64> {
    for (name, v) in [("r1", r1), ("r2", r2)] {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::InvalidInput(format!(
                "{name} = {v} is outside [0, 1]"
            )));
        }
    }
    Ok(if r1 == 0.0 {
        if r2 == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        r2 / r1
    })
}

struct AlignedInstance {
    ratio: f64,
    correct1: bool,
    correct2: bool,
}

/// Joins two tables on instance id (in M1 row order) and computes each
/// instance's robustness ratio.
fn align(m1: &PredictionTable, m2: &PredictionTable) -> Result<Vec<AlignedInstance>> {
    check_aligned(m1, m2)?;
    let by_id: HashMap<&str, usize> = m2
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.instance_id.as_str(), i))
        .collect();
    m1.rows()
        .iter()
        .map(|row1| {
            let row2 = &m2.rows()[by_id[row1.instance_id.as_str()]];
            let r1 = metrics::robustness_cor(&row1.dist);
            let r2 = metrics::robustness_cor(&row2.dist);
            Ok(AlignedInstance {
                ratio: robustness_ratio(r1, r2)?,
                correct1: row1.dist.argmax() == row1.true_label,
                correct2: row2.dist.argmax() == row2.true_label,
            })
        })
        .collect()
}

fn check_aligned(m1: &PredictionTable, m2: &PredictionTable) -> Result<()> {
    if m1.class_count() != m2.class_count() {
        return Err(Error::InvalidInput(format!(
            "class counts differ: {} vs {}",
            m1.class_count(),
            m2.class_count()
        )));
    }
    if m1.len() != m2.len() {
        return Err(Error::InvalidInput(format!(
            "tables have {} vs {} rows",
            m1.len(),
            m2.len()
        )));
    }
    let by_id: HashMap<&str, usize> = m2
        .rows()
        .iter()
        .map(|r| (r.instance_id.as_str(), r.true_label))
        .collect();
    for row in m1.rows() {
        match by_id.get(row.instance_id.as_str()) {
            None => {
                return Err(Error::InvalidInput(format!(
                    "instance {:?} missing from the second table",
                    row.instance_id
                )))
            }
            Some(&label) if label != row.true_label => {
                return Err(Error::InvalidInput(format!(
                    "instance {:?} has conflicting true labels {} vs {}",
                    row.instance_id, row.true_label, label
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// A candidate routing partition: instances sorted by ratio, cut after
/// `boundary` of them (M1 side), with the threshold realizing that cut.
struct Cut {
    boundary: usize,
    threshold: f64,
}

/// All achievable partitions: one cut per boundary between distinct sorted
/// ratios, plus the route-everything sentinels at both ends.
fn candidate_cuts(sorted_ratios: &[f64]) -> Vec<Cut> {
    let n = sorted_ratios.len();
    let mut cuts = vec![Cut {
        boundary: 0,
        threshold: f64::NEG_INFINITY,
    }];
    for i in 1..n {
        let (a, b) = (sorted_ratios[i - 1], sorted_ratios[i]);
        if a == b {
            continue;
        }
        let threshold = if b.is_infinite() {
            a + 1.0
        } else {
            // Keep the cut strictly below b even if the midpoint rounds up.
            let mid = a / 2.0 + b / 2.0;
            if mid < b {
                mid
            } else {
                a
            }
        };
        cuts.push(Cut {
            boundary: i,
            threshold,
        });
    }
    cuts.push(Cut {
        boundary: n,
        threshold: f64::INFINITY,
    });
    cuts
}

fn sorted_with_counts(items: &[AlignedInstance]) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let mut order: Vec<&AlignedInstance> = items.iter().collect();
    order.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let ratios: Vec<f64> = order.iter().map(|i| i.ratio).collect();
    let n = order.len();
    // prefix1[b] = correct M1 answers among the first b; suffix2[b] = correct
    // M2 answers from b onward.
    let mut prefix1 = vec![0usize; n + 1];
    for (i, item) in order.iter().enumerate() {
        prefix1[i + 1] = prefix1[i] + usize::from(item.correct1);
    }
    let mut suffix2 = vec![0usize; n + 1];
    for (i, item) in order.iter().enumerate().rev() {
        suffix2[i] = suffix2[i + 1] + usize::from(item.correct2);
    }
    (ratios, prefix1, suffix2)
}

fn fit_checked(m1: &PredictionTable, m2: &PredictionTable) -> Result<Vec<AlignedInstance>> {
    if m1.is_empty() {
        return Err(Error::InvalidInput("empty validation tables".into()));
    }
    align(m1, m2)
}

/// RS-D: the threshold maximizing combined validation accuracy (M1 below
/// the cut, M2 above). Ties go to the largest threshold.
pub fn fit_rsd(val_m1: &PredictionTable, val_m2: &PredictionTable) -> Result<SelectionPolicy> {
    let items = fit_checked(val_m1, val_m2)?;
    let (ratios, prefix1, suffix2) = sorted_with_counts(&items);

    let mut best_correct = 0usize;
    let mut best_threshold = f64::NEG_INFINITY;
    for cut in candidate_cuts(&ratios) {
        let combined = prefix1[cut.boundary] + suffix2[cut.boundary];
        if combined >= best_correct {
            best_correct = combined;
            best_threshold = cut.threshold;
        }
    }
    Ok(SelectionPolicy {
        strategy: Strategy::RsD,
        m1_id: val_m1.model_id().to_string(),
        m2_id: val_m2.model_id().to_string(),
        threshold: best_threshold,
        ratio_metric: default_ratio_metric(),
    })
}

/// RS-I: the threshold whose routed tail gives M2 the largest accuracy
/// advantage over M1, or `+inf` when no tail has a strictly positive one.
/// Gain ties go to the largest threshold.
pub fn fit_rsi(val_m1: &PredictionTable, val_m2: &PredictionTable) -> Result<SelectionPolicy> {
    let items = fit_checked(val_m1, val_m2)?;
    let (ratios, prefix1, suffix2) = sorted_with_counts(&items);
    let n = ratios.len();

    let mut best_gain = 0.0f64;
    let mut best_threshold = f64::INFINITY;
    for cut in candidate_cuts(&ratios) {
        if cut.boundary == n {
            continue; // empty tail has no defined gain
        }
        let tail = (n - cut.boundary) as f64;
        let tail_correct1 = prefix1[n] - prefix1[cut.boundary];
        let gain = (suffix2[cut.boundary] as f64 - tail_correct1 as f64) / tail;
        if gain > 0.0 && gain >= best_gain {
            best_gain = gain;
            best_threshold = cut.threshold;
        }
    }
    Ok(SelectionPolicy {
        strategy: Strategy::RsI,
        m1_id: val_m1.model_id().to_string(),
        m2_id: val_m2.model_id().to_string(),
        threshold: best_threshold,
        ratio_metric: default_ratio_metric(),
    })
}

/// Routes every instance per the policy and reports the chosen model's
/// argmax prediction.
pub fn apply_policy(
    policy: &SelectionPolicy,
    test_m1: &PredictionTable,
    test_m2: &PredictionTable,
) -> Result<Vec<RoutedPrediction>> {
    if policy.m1_id != test_m1.model_id() || policy.m2_id != test_m2.model_id() {
        return Err(Error::InvalidInput(format!(
            "policy routes ({}, {}) but tables are ({}, {})",
            policy.m1_id,
            policy.m2_id,
            test_m1.model_id(),
            test_m2.model_id()
        )));
    }
    check_aligned(test_m1, test_m2)?;
    let by_id: HashMap<&str, usize> = test_m2
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.instance_id.as_str(), i))
        .collect();
    test_m1
        .rows()
        .iter()
        .map(|row1| {
            let row2 = &test_m2.rows()[by_id[row1.instance_id.as_str()]];
            let r1 = metrics::robustness_cor(&row1.dist);
            let r2 = metrics::robustness_cor(&row2.dist);
            let ratio = robustness_ratio(r1, r2)?;
            let use_m2 = ratio > policy.threshold;
            Ok(RoutedPrediction {
                instance_id: row1.instance_id.clone(),
                chosen_model: if use_m2 {
                    policy.m2_id.clone()
                } else {
                    policy.m1_id.clone()
                },
                predicted_class: if use_m2 {
                    row2.dist.argmax()
                } else {
                    row1.dist.argmax()
                },
                ratio,
            })
        })
        .collect()
}

/// Accuracy of routed predictions against the labels in `truth`.
pub fn routed_accuracy(routed: &[RoutedPrediction], truth: &PredictionTable) -> Result<f64> {
    let labels: HashMap<&str, usize> = truth
        .rows()
        .iter()
        .map(|r| (r.instance_id.as_str(), r.true_label))
        .collect();
    let mut correct = 0usize;
    for r in routed {
        match labels.get(r.instance_id.as_str()) {
            Some(&label) => correct += usize::from(label == r.predicted_class),
            None => {
                return Err(Error::InvalidInput(format!(
                    "instance {:?} missing from the truth table",
                    r.instance_id
                )))
            }
        }
    }
    Ok(correct as f64 / routed.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::metrics::ClassDistribution;
    use crate::models::PredictionRow;

    /// Two-class distribution with a chosen `r_cor` and argmax.
    fn dist_for(r_cor: f64, predicted: usize) -> ClassDistribution {
        let a = 1.0 / (2.0 - r_cor);
        let probs = if predicted == 0 {
            vec![a, 1.0 - a]
        } else {
            vec![1.0 - a, a]
        };
        ClassDistribution::new(probs).unwrap()
    }

    /// Table where instance i is correct iff `correct[i]`, with the given
    /// r_cor scores; every true label is 0.
    fn table(model_id: &str, r_cors: &[f64], correct: &[bool]) -> PredictionTable {
        let rows = r_cors
            .iter()
            .zip(correct)
            .enumerate()
            .map(|(i, (&r, &ok))| PredictionRow {
                instance_id: format!("i{i:03}"),
                true_label: 0,
                dist: dist_for(r, usize::from(!ok)),
            })
            .collect();
        PredictionTable::new(model_id, 2, rows).unwrap()
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(robustness_ratio(0.5, 0.25).unwrap(), 0.5);
        assert_eq!(robustness_ratio(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(robustness_ratio(0.0, 0.8).unwrap(), f64::INFINITY);
        assert!(robustness_ratio(-0.1, 0.5).is_err());
        assert!(robustness_ratio(0.5, 1.2).is_err());
    }

    /// The worked four-instance scenario used across the fitting tests:
    /// ratios 0.5, 0.8, 1.2, 3.0 with M1 correct on the first two and M2
    /// correct on the last three.
    fn worked_example() -> (PredictionTable, PredictionTable) {
        let m1 = table("m1", &[0.5, 0.5, 0.5, 0.3], &[true, true, false, false]);
        let m2 = table("m2", &[0.25, 0.4, 0.6, 0.9], &[false, true, true, true]);
        (m1, m2)
    }

    #[test]
    fn rsd_picks_the_accuracy_maximizing_midpoint() {
        let (m1, m2) = worked_example();
        let policy = fit_rsd(&m1, &m2).unwrap();
        assert_abs_diff_eq!(policy.threshold, 1.0, epsilon = 1e-9);
        // Routing with that threshold answers every instance correctly.
        let routed = apply_policy(&policy, &m1, &m2).unwrap();
        assert_eq!(routed_accuracy(&routed, &m1).unwrap(), 1.0);
    }

    #[test]
    fn rsd_with_a_perfect_m1_keeps_everything_on_m1() {
        let m1 = table("m1", &[0.5, 0.4, 0.3], &[true, true, true]);
        let m2 = table("m2", &[0.6, 0.2, 0.9], &[false, true, false]);
        let policy = fit_rsd(&m1, &m2).unwrap();
        assert_eq!(policy.threshold, f64::INFINITY);
    }

    #[test]
    fn rsd_routes_everything_to_a_strictly_better_m2() {
        let m1 = table("m1", &[0.5, 0.4, 0.3], &[false, false, false]);
        let m2 = table("m2", &[0.6, 0.2, 0.9], &[true, true, true]);
        let policy = fit_rsd(&m1, &m2).unwrap();
        assert_eq!(policy.threshold, f64::NEG_INFINITY);
        let routed = apply_policy(&policy, &m1, &m2).unwrap();
        assert!(routed.iter().all(|r| r.chosen_model == "m2"));
        assert_eq!(routed_accuracy(&routed, &m1).unwrap(), 1.0);
    }

    #[test]
    fn rsi_maximizes_tail_gain_breaking_ties_upward() {
        let (m1, m2) = worked_example();
        let policy = fit_rsi(&m1, &m2).unwrap();
        // Tails above 1.0 and above 2.1 both have gain 1.0; ties resolve to
        // the largest threshold, midpoint of ratios 1.2 and 3.0.
        assert_abs_diff_eq!(policy.threshold, 2.1, epsilon = 1e-9);
    }

    #[test]
    fn rsi_with_no_positive_gain_degenerates_to_single_best() {
        let m1 = table("m1", &[0.5, 0.4, 0.3], &[true, true, true]);
        let m2 = table("m2", &[0.6, 0.2, 0.9], &[false, true, true]);
        let policy = fit_rsi(&m1, &m2).unwrap();
        assert_eq!(policy.threshold, f64::INFINITY);
    }

    #[test]
    fn rsi_on_identical_tables_degenerates_to_single_best() {
        let m1 = table("m1", &[0.5, 0.4, 0.3], &[true, false, true]);
        let mut m2 = m1.clone();
        m2 = PredictionTable::new("m2", m2.class_count(), m2.rows().to_vec()).unwrap();
        let policy = fit_rsi(&m1, &m2).unwrap();
        assert_eq!(policy.threshold, f64::INFINITY);
    }

    #[test]
    fn apply_uses_strict_inequality_at_the_boundary() {
        let m1 = table("m1", &[0.5, 0.2], &[true, false]);
        let m2 = table("m2", &[0.5, 0.6], &[false, true]);
        let policy = SelectionPolicy {
            strategy: super::Strategy::RsD,
            m1_id: "m1".into(),
            m2_id: "m2".into(),
            threshold: 1.0,
            ratio_metric: "r_cor".into(),
        };
        let routed = apply_policy(&policy, &m1, &m2).unwrap();
        assert_eq!(routed[0].ratio, 1.0);
        assert_eq!(routed[0].chosen_model, "m1"); // exactly at t stays on M1
        assert_eq!(routed[1].chosen_model, "m2"); // ratio 3.0 > 1.0
    }

    #[test]
    fn infinite_threshold_reproduces_m1_exactly() {
        let (m1, m2) = worked_example();
        let policy = SelectionPolicy::single_best("m1", "m2");
        let routed = apply_policy(&policy, &m1, &m2).unwrap();
        for (r, row) in routed.iter().zip(m1.rows()) {
            assert_eq!(r.chosen_model, "m1");
            assert_eq!(r.predicted_class, row.dist.argmax());
        }
    }

    #[test]
    fn misaligned_tables_are_rejected() {
        let m1 = table("m1", &[0.5, 0.4], &[true, true]);
        // Different id set.
        let rows = vec![PredictionRow {
            instance_id: "other".into(),
            true_label: 0,
            dist: dist_for(0.5, 0),
        }];
        let m2 = PredictionTable::new("m2", 2, rows).unwrap();
        assert!(fit_rsd(&m1, &m2).is_err());

        // Conflicting truth for a shared id.
        let rows = vec![
            PredictionRow {
                instance_id: "i000".into(),
                true_label: 1,
                dist: dist_for(0.5, 0),
            },
            PredictionRow {
                instance_id: "i001".into(),
                true_label: 0,
                dist: dist_for(0.5, 0),
            },
        ];
        let m2 = PredictionTable::new("m2", 2, rows).unwrap();
        assert!(fit_rsd(&m1, &m2).is_err());
    }

    #[test]
    fn policy_json_encodes_infinities_as_strings() {
        let policy = SelectionPolicy::single_best("a", "b");
        let json = policy.to_json();
        assert!(json.contains("\"inf\""));
        assert_eq!(SelectionPolicy::from_json(&json).unwrap(), policy);

        let mut neg = policy.clone();
        neg.threshold = f64::NEG_INFINITY;
        let json = neg.to_json();
        assert!(json.contains("\"-inf\""));
        assert_eq!(SelectionPolicy::from_json(&json).unwrap(), neg);

        let mut finite = policy;
        finite.threshold = 1.25;
        let back = SelectionPolicy::from_json(&finite.to_json()).unwrap();
        assert_eq!(back.threshold, 1.25);
        assert_eq!(back.ratio_metric, "r_cor");
    }

    /// Random aligned table pair of n instances over 3 classes.
    fn random_pair(seed: u64, n: usize) -> (PredictionTable, PredictionTable) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make_rows = |_: &str| {
            (0..n)
                .map(|i| {
                    let raw: Vec<f64> = (0..3).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
                    let sum: f64 = raw.iter().sum();
                    PredictionRow {
                        instance_id: format!("i{i:04}"),
                        true_label: i % 3,
                        dist: ClassDistribution::new(raw.iter().map(|w| w / sum).collect())
                            .unwrap(),
                    }
                })
                .collect::<Vec<_>>()
        };
        let rows1 = make_rows("m1");
        let rows2 = make_rows("m2");
        (
            PredictionTable::new("m1", 3, rows1).unwrap(),
            PredictionTable::new("m2", 3, rows2).unwrap(),
        )
    }

    proptest! {
        /// The sentinels are always candidates, so RS-D can never do worse
        /// on its own validation set than either pure model.
        #[test]
        fn rsd_dominates_both_models_on_validation(seed in 0u64..300) {
            let (m1, m2) = random_pair(seed, 40);
            let policy = fit_rsd(&m1, &m2).unwrap();
            let routed = apply_policy(&policy, &m1, &m2).unwrap();
            let routed_correct = routed
                .iter()
                .zip(m1.rows())
                .filter(|(r, row)| r.predicted_class == row.true_label)
                .count();
            prop_assert!(routed_correct >= m1.correct_count().max(m2.correct_count()));
        }

        /// Scaling both robustness inputs by the same factor leaves ratios,
        /// and hence the fitted routing partition, untouched (powers of two
        /// scale exactly in binary floating point).
        #[test]
        fn routing_partition_is_scale_invariant(seed in 0u64..100) {
            let (m1, m2) = random_pair(seed, 25);
            let base = fit_rsd(&m1, &m2).unwrap();
            let base_routes: Vec<String> = apply_policy(&base, &m1, &m2)
                .unwrap()
                .into_iter()
                .map(|r| r.chosen_model)
                .collect();

            let scale = 0.5;
            let scaled_ratio = |row1: &PredictionRow, row2: &PredictionRow| {
                let r1 = scale * metrics::robustness_cor(&row1.dist);
                let r2 = scale * metrics::robustness_cor(&row2.dist);
                robustness_ratio(r1, r2).unwrap()
            };
            // Ratios are bit-identical after scaling, so the refit threshold
            // induces the same partition.
            let by_id: std::collections::HashMap<&str, usize> = m2
                .rows()
                .iter()
                .enumerate()
                .map(|(i, r)| (r.instance_id.as_str(), i))
                .collect();
            for (row1, route) in m1.rows().iter().zip(&base_routes) {
                let row2 = &m2.rows()[by_id[row1.instance_id.as_str()]];
                let expected = if scaled_ratio(row1, row2) > base.threshold { "m2" } else { "m1" };
                prop_assert_eq!(route, expected);
            }
        }

        #[test]
        fn fitting_is_deterministic(seed in 0u64..100) {
            let (m1, m2) = random_pair(seed, 30);
            prop_assert_eq!(fit_rsd(&m1, &m2).unwrap(), fit_rsd(&m1, &m2).unwrap());
            prop_assert_eq!(fit_rsi(&m1, &m2).unwrap(), fit_rsi(&m1, &m2).unwrap());
        }
    }
}
