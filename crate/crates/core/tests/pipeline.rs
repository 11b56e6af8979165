//! End-to-end flow through the library surface: CSV in, robustness scores,
//! curves, fitted routing policies and routed predictions out.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robcor::arc;
use robcor::data::{self, SchemaHints, SplitSpec};
use robcor::metrics;
use robcor::models::{self, ClassifierKind, ClassifierSpec};
use robcor::selection;

/// Writes a small two-blob dataset as CSV text.
fn blob_csv(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("x0,x1,target\n");
    for i in 0..n {
        let label = i % 2;
        let center = if label == 0 { -1.0 } else { 1.0 };
        csv.push_str(&format!(
            "{},{},c{label}\n",
            center + rng.gen_range(-1.3..1.3),
            rng.gen_range(-1.0..1.0),
        ));
    }
    csv
}

#[test]
fn csv_to_routed_predictions() {
    let csv = blob_csv(200, 99);
    let dataset =
        data::parse_dataset_csv(csv.as_bytes(), "inline", "blobs", "target", &SchemaHints::default())
            .unwrap();
    assert_eq!(dataset.class_count, 2);

    let spec = SplitSpec::new((0.7, 0.15, 0.15), 17).unwrap();
    let manifest = data::split_indices(dataset.len(), &spec).unwrap();
    let train = dataset.subset(&manifest.train);
    let validation = dataset.subset(&manifest.validation);
    let test = dataset.subset(&manifest.test);

    let nb = models::fit(
        &ClassifierSpec {
            kind: ClassifierKind::GaussianNb {
                variance_floor: 1e-9,
            },
            seed: 0,
        },
        train.features.view(),
        &train.labels,
        dataset.class_count,
    )
    .unwrap();
    let knn = models::fit(
        &ClassifierSpec {
            kind: ClassifierKind::Knn { k: 5 },
            seed: 0,
        },
        train.features.view(),
        &train.labels,
        dataset.class_count,
    )
    .unwrap();

    let ids = |idx: &[usize]| -> Vec<String> { idx.iter().map(|i| i.to_string()).collect() };
    let val_ids = ids(&manifest.validation);
    let test_ids = ids(&manifest.test);

    let val_nb = nb
        .predict_table("nb", validation.features.view(), &val_ids, &validation.labels)
        .unwrap();
    let val_knn = knn
        .predict_table("knn", validation.features.view(), &val_ids, &validation.labels)
        .unwrap();
    let (val_m1, val_m2) = if val_nb.accuracy() >= val_knn.accuracy() {
        (&val_nb, &val_knn)
    } else {
        (&val_knn, &val_nb)
    };

    let policy = selection::fit_rsd(val_m1, val_m2).unwrap();
    assert_eq!(policy.ratio_metric, "r_cor");

    let test_nb = nb
        .predict_table("nb", test.features.view(), &test_ids, &test.labels)
        .unwrap();
    let test_knn = knn
        .predict_table("knn", test.features.view(), &test_ids, &test.labels)
        .unwrap();
    let (test_m1, test_m2) = if val_m1.model_id() == "nb" {
        (&test_nb, &test_knn)
    } else {
        (&test_knn, &test_nb)
    };
    let routed = selection::apply_policy(&policy, test_m1, test_m2).unwrap();
    assert_eq!(routed.len(), test.len());
    let accuracy = selection::routed_accuracy(&routed, test_m1).unwrap();
    assert!(accuracy > 0.5, "routing should beat coin flipping, got {accuracy}");

    // Robustness-ordered ARC of the test set starts at base accuracy.
    let curve = arc::build_arc(&test_m1.robustness_outcomes()).unwrap();
    assert_eq!(
        curve.base_accuracy().to_bits(),
        test_m1.accuracy().to_bits()
    );
}

#[test]
fn prediction_csv_feeds_scoring_and_curves() {
    // External predictions enter through the CSV boundary alone.
    let csv = "instance_id,true_label,p_0,p_1,p_2\n\
               a,0,0.6,0.3,0.1\n\
               b,2,0.1,0.2,0.7\n\
               c,1,0.5,0.3,0.2\n\
               d,1,0.2,0.6,0.2\n";
    let table = models::parse_prediction_csv(csv.as_bytes(), "inline", "external").unwrap();
    let scores: Vec<f64> = table
        .rows()
        .iter()
        .map(|r| metrics::robustness_cor(&r.dist))
        .collect();
    assert_eq!(scores[0], 0.5);
    let curve = arc::build_arc(&table.robustness_outcomes()).unwrap();
    assert_eq!(curve.base_accuracy(), 0.75);

    // The lowest-robustness instance ("c", wrong) is rejected first.
    assert_eq!(curve.points()[1].accuracy, 1.0);
}

#[test]
fn oracle_agrees_with_model_probabilities() {
    // A model's conditional at some input, embedded as one column of a
    // joint pmf, must yield the same robustness either way.
    let x = Array2::from_shape_vec((4, 1), vec![-2.0, -1.0, 1.0, 2.0]).unwrap();
    let labels = vec![0, 0, 1, 1];
    let model = models::fit(
        &ClassifierSpec {
            kind: ClassifierKind::Knn { k: 3 },
            seed: 0,
        },
        x.view(),
        &labels,
        2,
    )
    .unwrap();
    let dist = &model
        .predict_proba(Array2::from_shape_vec((1, 1), vec![-1.5]).unwrap().view())
        .unwrap()[0];
    let direct = metrics::robustness(dist);

    // Embed as the single column of a joint model.
    let joint = robcor::oracle::FiniteJointModel::from_flat(
        2,
        1,
        dist.probs().to_vec(),
    )
    .unwrap();
    let column = joint.column_robustness(0).unwrap();
    assert_eq!(direct.r_star, column.r_star);
    let (witness, q) = robcor::oracle::build_witness(&joint, 0).unwrap();
    assert!((witness.ratio - direct.r_star).abs() <= 1e-12);
    let attained = robcor::oracle::dstar_finite(&joint, &q).unwrap();
    assert!((attained - direct.r_star).abs() <= 1e-9 * direct.r_star);
}
