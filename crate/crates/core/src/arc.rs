//! Accuracy-rejection curves.
//!
//! Outcomes are sorted by a score (ascending, lowest rejected first) and the
//! accuracy of the retained tail is recorded at every removal step. Good
//! scores push errors to the front, so the curve climbs toward 1 quickly;
//! uninformative scores leave it near the base accuracy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One scored prediction outcome: the ordering key plus whether the
/// prediction was correct.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredOutcome {
    pub instance_id: String,
    pub score: f64,
    pub correct: bool,
}

impl ScoredOutcome {
    pub fn new(instance_id: impl Into<String>, score: f64, correct: bool) -> Self {
        Self {
            instance_id: instance_id.into(),
            score,
            correct,
        }
    }
}

/// A point of an accuracy-rejection curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub rejection_fraction: f64,
    pub accuracy: f64,
}

/// An accuracy-rejection curve: accuracy of the retained samples as a
/// step function of the rejected fraction. The domain ends one sample short
/// of full rejection (accuracy of an empty set is undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ARCurve {
    points: Vec<ArcPoint>,
    /// Sample count behind the curve; bounds the domain at `1 - 1/n`.
    n: usize,
}

impl ARCurve {
    /// Validates: non-empty, first point at rejection 0, fractions strictly
    /// increasing within `[0, 1)`, accuracies within `[0, 1]`.
    pub fn from_points(points: Vec<ArcPoint>, n: usize) -> Result<Self> {
        if points.is_empty() || n == 0 {
            return Err(Error::InvalidInput("curve needs at least one point".into()));
        }
        if points[0].rejection_fraction != 0.0 {
            return Err(Error::InvalidInput(format!(
                "first point must be at rejection 0, got {}",
                points[0].rejection_fraction
            )));
        }
        for pair in points.windows(2) {
            if pair[1].rejection_fraction <= pair[0].rejection_fraction {
                return Err(Error::InvalidInput(
                    "rejection fractions must be strictly increasing".into(),
                ));
            }
        }
        for p in &points {
            if !(0.0..1.0).contains(&p.rejection_fraction) || !(0.0..=1.0).contains(&p.accuracy) {
                return Err(Error::InvalidInput(format!(
                    "point ({}, {}) out of range",
                    p.rejection_fraction, p.accuracy
                )));
            }
        }
        Ok(Self { points, n })
    }

    pub fn points(&self) -> &[ArcPoint] {
        &self.points
    }

    pub fn sample_count(&self) -> usize {
        self.n
    }

    /// Accuracy at rejection 0, i.e. on all samples.
    pub fn base_accuracy(&self) -> f64 {
        self.points[0].accuracy
    }

    /// Step lookup: the accuracy of the last point at or before `fraction`
    /// (a hair of slack absorbs float noise in grid construction).
    pub fn value_at(&self, fraction: f64) -> f64 {
        let idx = self
            .points
            .partition_point(|p| p.rejection_fraction <= fraction + 1e-12);
        self.points[idx.saturating_sub(1)].accuracy
    }

    /// Writes the curve as `rejection_fraction,accuracy` CSV rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rejection_fraction,accuracy")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.rejection_fraction, p.accuracy)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Builds the curve from raw outcomes: sort ascending by `(score,
/// instance_id)`, then record the retained-tail accuracy after each removal.
pub fn build_arc(outcomes: &[ScoredOutcome]) -> Result<ARCurve> {
    if outcomes.is_empty() {
        return Err(Error::InvalidInput("no outcomes to build a curve from".into()));
    }
    if let Some(bad) = outcomes.iter().find(|o| o.score.is_nan()) {
        return Err(Error::InvalidInput(format!(
            "instance {} has NaN score",
            bad.instance_id
        )));
    }
    let mut sorted: Vec<&ScoredOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });

    let n = sorted.len();
    // suffix_correct[k] = number correct among the last n-k outcomes
    let mut suffix_correct = vec![0usize; n + 1];
    for k in (0..n).rev() {
        suffix_correct[k] = suffix_correct[k + 1] + usize::from(sorted[k].correct);
    }
    let points = (0..n)
        .map(|k| ArcPoint {
            rejection_fraction: k as f64 / n as f64,
            accuracy: suffix_correct[k] as f64 / (n - k) as f64,
        })
        .collect();
    ARCurve::from_points(points, n)
}

/// Pointwise mean of several curves on a shared grid of `grid_size`
/// equispaced fractions covering `[0, 1 - 1/max_n]`, each curve read as a
/// step function.
pub fn average_arcs(curves: &[ARCurve], grid_size: usize) -> Result<ARCurve> {
    if curves.is_empty() {
        return Err(Error::InvalidInput("no curves to average".into()));
    }
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!(
            "grid size must be >= 2, got {grid_size}"
        )));
    }
    let max_n = curves.iter().map(|c| c.n).max().expect("non-empty");
    let upper = 1.0 - 1.0 / max_n as f64;
    let fractions: Vec<f64> = if upper <= 0.0 {
        vec![0.0]
    } else {
        (0..grid_size)
            .map(|i| upper * i as f64 / (grid_size - 1) as f64)
            .collect()
    };
    let points = fractions
        .into_iter()
        .map(|f| ArcPoint {
            rejection_fraction: f,
            accuracy: curves.iter().map(|c| c.value_at(f)).sum::<f64>() / curves.len() as f64,
        })
        .collect();
    ARCurve::from_points(points, max_n)
}

/// Default grid used when averaging curves from splits of unequal size.
pub const DEFAULT_AVERAGE_GRID: usize = 101;

const SVG_PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders labeled curves as a minimal standalone SVG line plot.
pub fn svg_line_plot(curves: &[(String, &ARCurve)]) -> String {
    let (w, h) = (640.0, 420.0);
    let margin = 50.0;
    let (pw, ph) = (w - 2.0 * margin, h - 2.0 * margin);
    let x = |f: f64| margin + f * pw;
    let y = |a: f64| margin + (1.0 - a) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"{margin}\" y=\"{margin}\" width=\"{pw}\" height=\"{ph}\" \
         fill=\"none\" stroke=\"#333\"/>\n"
    ));
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.2}</text>\n",
            x(t),
            h - margin + 16.0,
            t
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.2}</text>\n",
            margin - 6.0,
            y(t) + 4.0,
            t
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">rejection fraction</text>\n",
        w / 2.0,
        h - 10.0
    ));
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = SVG_PALETTE[i % SVG_PALETTE.len()];
        let path: Vec<String> = curve
            .points()
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.rejection_fraction), y(p.accuracy)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{label}</text>\n",
            margin + 8.0,
            margin + 16.0 + 14.0 * i as f64,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{self, ClassDistribution};
    use proptest::prelude::*;

    fn outcomes(scores: &[f64], correct: &[bool]) -> Vec<ScoredOutcome> {
        scores
            .iter()
            .zip(correct)
            .enumerate()
            .map(|(i, (&s, &c))| ScoredOutcome::new(format!("i{i:03}"), s, c))
            .collect()
    }

    #[test]
    fn hand_enumerated_curve() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        let pts = arc.points();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].rejection_fraction, 0.0);
        assert_eq!(pts[0].accuracy, 2.0 / 3.0);
        assert_eq!(pts[1].rejection_fraction, 1.0 / 3.0);
        assert_eq!(pts[1].accuracy, 1.0);
        assert_eq!(pts[2].rejection_fraction, 2.0 / 3.0);
        assert_eq!(pts[2].accuracy, 1.0);
    }

    #[test]
    fn constant_cases() {
        let arc = build_arc(&outcomes(&[0.3, 0.1, 0.8], &[true, true, true])).unwrap();
        assert!(arc.points().iter().all(|p| p.accuracy == 1.0));
        let arc = build_arc(&outcomes(&[0.3, 0.1, 0.8], &[false, false, false])).unwrap();
        assert!(arc.points().iter().all(|p| p.accuracy == 0.0));
    }

    #[test]
    fn empty_and_nan_inputs_are_rejected() {
        assert!(build_arc(&[]).is_err());
        assert!(build_arc(&outcomes(&[f64::NAN], &[true])).is_err());
    }

    #[test]
    fn base_point_is_exact_overall_accuracy() {
        let os = outcomes(&[0.2, 0.4, 0.1, 0.9, 0.5], &[true, false, true, true, false]);
        let arc = build_arc(&os).unwrap();
        let correct = os.iter().filter(|o| o.correct).count();
        assert_eq!(
            arc.base_accuracy().to_bits(),
            (correct as f64 / os.len() as f64).to_bits()
        );
    }

    #[test]
    fn ties_order_by_instance_id_regardless_of_input_order() {
        let mut os = vec![
            ScoredOutcome::new("b", 0.5, false),
            ScoredOutcome::new("a", 0.5, true),
            ScoredOutcome::new("c", 0.9, true),
        ];
        let forward = build_arc(&os).unwrap();
        os.reverse();
        let reversed = build_arc(&os).unwrap();
        assert_eq!(forward, reversed);
        // "a" (correct) is rejected first, so accuracy drops at step one.
        assert_eq!(forward.points()[1].accuracy, 0.5);
    }

    #[test]
    fn value_at_is_a_left_closed_step() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        assert_eq!(arc.value_at(0.0), 2.0 / 3.0);
        assert_eq!(arc.value_at(0.2), 2.0 / 3.0);
        assert_eq!(arc.value_at(1.0 / 3.0), 1.0);
        assert_eq!(arc.value_at(0.4), 1.0);
        assert_eq!(arc.value_at(0.99), 1.0);
    }

    #[test]
    fn averaging_one_curve_reproduces_it_on_its_own_grid() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        let avg = average_arcs(std::slice::from_ref(&arc), 3).unwrap();
        for (a, b) in arc.points().iter().zip(avg.points()) {
            assert_eq!(a.accuracy, b.accuracy);
        }
    }

    #[test]
    fn averaging_identical_curves_is_idempotent() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        let avg = average_arcs(&[arc.clone(), arc.clone()], 3).unwrap();
        for (a, b) in arc.points().iter().zip(avg.points()) {
            assert_eq!(a.accuracy, b.accuracy);
        }
    }

    #[test]
    fn averaging_takes_the_pointwise_mean() {
        let a = ARCurve::from_points(
            vec![
                ArcPoint { rejection_fraction: 0.0, accuracy: 0.5 },
                ArcPoint { rejection_fraction: 0.5, accuracy: 1.0 },
            ],
            2,
        )
        .unwrap();
        let b = ARCurve::from_points(
            vec![
                ArcPoint { rejection_fraction: 0.0, accuracy: 0.7 },
                ArcPoint { rejection_fraction: 0.5, accuracy: 0.9 },
            ],
            2,
        )
        .unwrap();
        let avg = average_arcs(&[a, b], 2).unwrap();
        assert_eq!(avg.points()[0].accuracy, 0.6);
        assert_eq!(avg.points()[1].accuracy, 0.95);
    }

    #[test]
    fn averaging_preconditions() {
        assert!(average_arcs(&[], 11).is_err());
        let arc = build_arc(&outcomes(&[0.1], &[true])).unwrap();
        assert!(average_arcs(std::slice::from_ref(&arc), 1).is_err());
    }

    #[test]
    fn curve_validation_rejects_bad_point_lists() {
        let p = |f, a| ArcPoint { rejection_fraction: f, accuracy: a };
        assert!(ARCurve::from_points(vec![], 1).is_err());
        assert!(ARCurve::from_points(vec![p(0.1, 0.5)], 1).is_err());
        assert!(ARCurve::from_points(vec![p(0.0, 0.5), p(0.0, 0.6)], 2).is_err());
        assert!(ARCurve::from_points(vec![p(0.0, 1.5)], 1).is_err());
    }

    #[test]
    fn csv_output_has_header_and_full_precision() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        let csv = arc.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("rejection_fraction,accuracy"));
        assert_eq!(lines.next(), Some("0,0.6666666666666666"));
    }

    #[test]
    fn svg_smoke() {
        let arc = build_arc(&outcomes(&[0.1, 0.9, 0.5], &[false, true, true])).unwrap();
        let svg = svg_line_plot(&[("by score".to_string(), &arc)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("by score"));
    }

    prop_compose! {
        fn arb_outcomes()(n in 1usize..40)(
            scores in prop::collection::vec(-10.0f64..10.0, n),
            correct in prop::collection::vec(any::<bool>(), n),
        ) -> Vec<ScoredOutcome> {
            outcomes(&scores, &correct)
        }
    }

    proptest! {
        #[test]
        fn monotone_transforms_leave_the_curve_unchanged(os in arb_outcomes()) {
            let base = build_arc(&os).unwrap();
            let transformed: Vec<ScoredOutcome> = os
                .iter()
                .map(|o| ScoredOutcome::new(o.instance_id.clone(), o.score.exp(), o.correct))
                .collect();
            prop_assert_eq!(base, build_arc(&transformed).unwrap());
        }

        #[test]
        fn perfect_orderings_saturate_after_the_errors(os in arb_outcomes()) {
            // Rescore so every incorrect outcome sorts strictly first.
            let scored: Vec<ScoredOutcome> = os
                .iter()
                .map(|o| {
                    let s = if o.correct { o.score.abs() + 1.0 } else { -o.score.abs() - 1.0 };
                    ScoredOutcome::new(o.instance_id.clone(), s, o.correct)
                })
                .collect();
            let wrong = scored.iter().filter(|o| !o.correct).count();
            let arc = build_arc(&scored).unwrap();
            for p in arc.points() {
                let expected_full = p.rejection_fraction >= wrong as f64 / scored.len() as f64;
                prop_assert_eq!(p.accuracy == 1.0, expected_full);
            }
        }

        #[test]
        fn cor_and_star_orderings_give_bit_identical_curves(
            seeds in prop::collection::vec(0u32..1000, 2..30),
        ) {
            let mut by_cor = Vec::new();
            let mut by_star = Vec::new();
            for (i, s) in seeds.iter().enumerate() {
                // Cheap deterministic distribution from the seed.
                let a = 0.2 + 0.6 * (*s as f64 / 1000.0);
                let rest = (1.0 - a) / 2.0;
                let d = ClassDistribution::new(vec![a, rest, rest]).unwrap();
                let score = metrics::robustness(&d);
                let correct = s % 3 == 0;
                by_cor.push(ScoredOutcome::new(format!("i{i}"), score.r_cor, correct));
                by_star.push(ScoredOutcome::new(format!("i{i}"), score.r_star, correct));
            }
            let a = build_arc(&by_cor).unwrap();
            let b = build_arc(&by_star).unwrap();
            for (pa, pb) in a.points().iter().zip(b.points()) {
                prop_assert_eq!(pa.rejection_fraction.to_bits(), pb.rejection_fraction.to_bits());
                prop_assert_eq!(pa.accuracy.to_bits(), pb.accuracy.to_bits());
            }
        }
    }
}
