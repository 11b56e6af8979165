//! Built-in probabilistic classifiers and prediction tables.
//!
//! The robustness metrics only need a conditional distribution per
//! instance, so models are deliberately simple: Gaussian naive Bayes, k-NN
//! and a CART-style random forest, each deterministic given its spec and
//! seed. Externally produced predictions enter through the same
//! [`PredictionTable`] type via [`read_prediction_csv`], which makes the
//! rest of the pipeline model-agnostic.
//!
//! Count-based probabilities (k-NN votes, tree leaves) use Laplace
//! smoothing with alpha = 1 so finite samples never produce spurious zero
//! probabilities, which would otherwise inflate robustness to infinity.

mod forest;
mod knn;
mod naive_bayes;

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::arc::ScoredOutcome;
use crate::metrics::{self, ClassDistribution};
use crate::{Error, Result};

pub use forest::ForestModel;
pub use knn::KnnModel;
pub use naive_bayes::GaussianNbModel;

/// Default variance floor added to every per-class feature variance in
/// Gaussian naive Bayes; keeps constant features from producing singular
/// densities.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-9;

/// One instance's record: identifier, ground truth and the model's
/// conditional distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub instance_id: String,
    pub true_label: usize,
    pub dist: ClassDistribution,
}

/// Aligned per-instance predictions of one model on one data slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTable {
    model_id: String,
    class_count: usize,
    rows: Vec<PredictionRow>,
}

impl PredictionTable {
    /// Validates: unique instance ids, labels below `class_count`, every
    /// distribution over exactly `class_count` classes.
    pub fn new(
        model_id: impl Into<String>,
        class_count: usize,
        rows: Vec<PredictionRow>,
    ) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::InvalidInput(format!(
                "prediction table needs at least 2 classes, got {class_count}"
            )));
        }
        let mut seen = HashSet::new();
        for row in &rows {
            if !seen.insert(row.instance_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate instance id {:?}",
                    row.instance_id
                )));
            }
            if row.true_label >= class_count {
                return Err(Error::InvalidInput(format!(
                    "instance {:?} has label {} but only {class_count} classes",
                    row.instance_id, row.true_label
                )));
            }
            if row.dist.class_count() != class_count {
                return Err(Error::InvalidInput(format!(
                    "instance {:?} has {} probabilities, expected {class_count}",
                    row.instance_id,
                    row.dist.class_count()
                )));
            }
        }
        Ok(Self {
            model_id: model_id.into(),
            class_count,
            rows,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of rows whose argmax prediction matches the true label.
    pub fn correct_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.dist.argmax() == r.true_label)
            .count()
    }

    /// Fraction of correct argmax predictions. Meaningless on empty tables.
    pub fn accuracy(&self) -> f64 {
        self.correct_count() as f64 / self.rows.len() as f64
    }

    /// Outcomes scored by `r_cor`, ready for [`crate::arc::build_arc`].
    pub fn robustness_outcomes(&self) -> Vec<ScoredOutcome> {
        self.rows
            .iter()
            .map(|r| {
                ScoredOutcome::new(
                    r.instance_id.clone(),
                    metrics::robustness_cor(&r.dist),
                    r.dist.argmax() == r.true_label,
                )
            })
            .collect()
    }
}

/// Hyperparameters per classifier kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    GaussianNb { variance_floor: f64 },
    Knn { k: usize },
    RandomForest {
        tree_count: usize,
        /// `None` grows trees until pure.
        max_depth: Option<usize>,
        min_leaf: usize,
    },
}

/// A classifier recipe: kind, hyperparameters and the seed that pins every
/// random choice (bootstrap samples, feature subsampling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub kind: ClassifierKind,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ClassifierKind::GaussianNb { variance_floor } => {
                if !variance_floor.is_finite() || *variance_floor <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "variance floor must be a positive finite value, got {variance_floor}"
                    )));
                }
            }
            ClassifierKind::Knn { k } => {
                if *k == 0 {
                    return Err(Error::InvalidInput("k must be >= 1".into()));
                }
            }
            ClassifierKind::RandomForest {
                tree_count,
                max_depth,
                min_leaf,
            } => {
                if *tree_count == 0 {
                    return Err(Error::InvalidInput("tree count must be >= 1".into()));
                }
                if *min_leaf == 0 {
                    return Err(Error::InvalidInput("min leaf must be >= 1".into()));
                }
                if matches!(max_depth, Some(0)) {
                    return Err(Error::InvalidInput("max depth must be >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// An immutable fitted model. Refitting with identical spec, data and seed
/// reproduces bit-identical probabilities.
#[derive(Debug, Clone)]
pub enum FittedModel {
    GaussianNb(GaussianNbModel),
    Knn(KnnModel),
    Forest(ForestModel),
}

impl FittedModel {
    pub fn class_count(&self) -> usize {
        match self {
            FittedModel::GaussianNb(m) => m.class_count(),
            FittedModel::Knn(m) => m.class_count(),
            FittedModel::Forest(m) => m.class_count(),
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            FittedModel::GaussianNb(m) => m.feature_count(),
            FittedModel::Knn(m) => m.feature_count(),
            FittedModel::Forest(m) => m.feature_count(),
        }
    }

    /// Conditional class distributions for a query matrix. An empty matrix
    /// yields an empty vector.
    pub fn predict_proba(&self, features: ArrayView2<f64>) -> Result<Vec<ClassDistribution>> {
        if features.nrows() > 0 && features.ncols() != self.feature_count() {
            return Err(Error::InvalidInput(format!(
                "query has {} features, model was trained on {}",
                features.ncols(),
                self.feature_count()
            )));
        }
        features
            .rows()
            .into_iter()
            .map(|row| {
                let probs = match self {
                    FittedModel::GaussianNb(m) => m.predict_row(row),
                    FittedModel::Knn(m) => m.predict_row(row),
                    FittedModel::Forest(m) => m.predict_row(row),
                };
                ClassDistribution::new(probs)
            })
            .collect()
    }

    /// Predictions assembled into a [`PredictionTable`] with the given
    /// instance ids and ground-truth labels.
    pub fn predict_table(
        &self,
        model_id: &str,
        features: ArrayView2<f64>,
        ids: &[String],
        true_labels: &[usize],
    ) -> Result<PredictionTable> {
        let n = features.nrows();
        if ids.len() != n || true_labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "query has {n} rows but {} ids and {} labels",
                ids.len(),
                true_labels.len()
            )));
        }
        let dists = self.predict_proba(features)?;
        let rows = ids
            .iter()
            .zip(true_labels)
            .zip(dists)
            .map(|((id, &label), dist)| PredictionRow {
                instance_id: id.clone(),
                true_label: label,
                dist,
            })
            .collect();
        PredictionTable::new(model_id, self.class_count(), rows)
    }
}

/// Fits a classifier. Requires at least two classes present in `labels`,
/// finite features, and `labels` below `class_count`.
pub fn fit(
    spec: &ClassifierSpec,
    features: ArrayView2<f64>,
    labels: &[usize],
    class_count: usize,
) -> Result<FittedModel> {
    spec.validate()?;
    if features.nrows() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if features.nrows() == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {class_count} classes"
        )));
    }
    let distinct: HashSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::InvalidInput(
            "training data contains a single class".into(),
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "features contain non-finite values".into(),
        ));
    }
    Ok(match &spec.kind {
        ClassifierKind::GaussianNb { variance_floor } => FittedModel::GaussianNb(
            GaussianNbModel::fit(features, labels, class_count, *variance_floor),
        ),
        ClassifierKind::Knn { k } => {
            FittedModel::Knn(KnnModel::fit(features, labels, class_count, *k)?)
        }
        ClassifierKind::RandomForest {
            tree_count,
            max_depth,
            min_leaf,
        } => FittedModel::Forest(ForestModel::fit(
            features,
            labels,
            class_count,
            *tree_count,
            *max_depth,
            *min_leaf,
            spec.seed,
        )),
    })
}

/// Picks the spec with the best mean fold accuracy under stratified k-fold
/// cross-validation. Ties go to the earliest spec in the list.
pub fn grid_search_cv(
    specs: &[ClassifierSpec],
    features: ArrayView2<f64>,
    labels: &[usize],
    class_count: usize,
    folds: usize,
) -> Result<ClassifierSpec> {
    if specs.is_empty() {
        return Err(Error::InvalidInput("no candidate specs".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidInput(format!(
            "cross-validation needs >= 2 folds, got {folds}"
        )));
    }
    let assignment = stratified_folds(labels, class_count, folds)?;

    let mut best: Option<(usize, f64)> = None;
    for (i, spec) in specs.iter().enumerate() {
        let mut fold_acc = Vec::with_capacity(folds);
        for fold in 0..folds {
            let train_idx: Vec<usize> = (0..labels.len())
                .filter(|&j| assignment[j] != fold)
                .collect();
            let test_idx: Vec<usize> = (0..labels.len())
                .filter(|&j| assignment[j] == fold)
                .collect();
            let train_x = features.select(ndarray::Axis(0), &train_idx);
            let train_y: Vec<usize> = train_idx.iter().map(|&j| labels[j]).collect();
            let model = fit(spec, train_x.view(), &train_y, class_count)?;
            let test_x = features.select(ndarray::Axis(0), &test_idx);
            let dists = model.predict_proba(test_x.view())?;
            let correct = dists
                .iter()
                .zip(&test_idx)
                .filter(|(d, &j)| d.argmax() == labels[j])
                .count();
            fold_acc.push(correct as f64 / test_idx.len() as f64);
        }
        let mean = fold_acc.iter().sum::<f64>() / folds as f64;
        if best.map_or(true, |(_, acc)| mean > acc) {
            best = Some((i, mean));
        }
    }
    Ok(specs[best.expect("specs non-empty").0].clone())
}

/// Deals each class round-robin into folds, so every class reaches every
/// fold whenever it has at least `folds` instances.
fn stratified_folds(labels: &[usize], class_count: usize, folds: usize) -> Result<Vec<usize>> {
    let mut next_fold = vec![0usize; class_count];
    let mut assignment = vec![0usize; labels.len()];
    for (i, &label) in labels.iter().enumerate() {
        assignment[i] = next_fold[label];
        next_fold[label] = (next_fold[label] + 1) % folds;
    }
    for (class, &count) in class_counts(labels, class_count).iter().enumerate() {
        if count > 0 && count < folds {
            return Err(Error::Stratification(format!(
                "class {class} has {count} instances, fewer than {folds} folds"
            )));
        }
    }
    Ok(assignment)
}

pub(crate) fn class_counts(labels: &[usize], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0usize; class_count];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Reads a prediction CSV with header `instance_id,true_label,p_0,...`.
/// Malformed rows are reported with their 1-based line number.
pub fn read_prediction_csv(path: &Path, model_id: &str) -> Result<PredictionTable> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(path.display().to_string(), 0, e.to_string()))?;
    parse_prediction_csv(file, &path.display().to_string(), model_id)
}

/// Same as [`read_prediction_csv`] but over any reader; `source` names the
/// input in error messages.
pub fn parse_prediction_csv(
    reader: impl Read,
    source: &str,
    model_id: &str,
) -> Result<PredictionTable> {
    let mut csv_reader = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::data(source, 1, e.to_string()))?
        .clone();
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 4 || fields[0] != "instance_id" || fields[1] != "true_label" {
        return Err(Error::data(
            source,
            1,
            "header must be instance_id,true_label,p_0,...,p_{K-1} with K >= 2",
        ));
    }
    let class_count = fields.len() - 2;
    for (i, field) in fields[2..].iter().enumerate() {
        if *field != format!("p_{i}") {
            return Err(Error::data(
                source,
                1,
                format!("expected probability column p_{i}, found {field:?}"),
            ));
        }
    }

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::data(source, 0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != fields.len() {
            return Err(Error::data(
                source,
                line,
                format!("expected {} fields, found {}", fields.len(), record.len()),
            ));
        }
        let instance_id = record[0].to_string();
        if !seen.insert(instance_id.clone()) {
            return Err(Error::data(
                source,
                line,
                format!("duplicate instance id {instance_id:?}"),
            ));
        }
        let true_label: usize = record[1]
            .parse()
            .map_err(|_| Error::data(source, line, format!("bad label {:?}", &record[1])))?;
        if true_label >= class_count {
            return Err(Error::data(
                source,
                line,
                format!("label {true_label} out of range for {class_count} classes"),
            ));
        }
        let mut probs = Vec::with_capacity(class_count);
        for field in record.iter().skip(2) {
            let p: f64 = field
                .parse()
                .map_err(|_| Error::data(source, line, format!("bad probability {field:?}")))?;
            probs.push(p);
        }
        let dist = ClassDistribution::new(probs)
            .map_err(|e| Error::data(source, line, e.to_string()))?;
        rows.push(PredictionRow {
            instance_id,
            true_label,
            dist,
        });
    }
    PredictionTable::new(model_id, class_count, rows)
}

/// Writes a table in the format [`read_prediction_csv`] accepts.
pub fn write_prediction_csv<W: Write>(table: &PredictionTable, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["instance_id".to_string(), "true_label".to_string()];
    header.extend((0..table.class_count()).map(|i| format!("p_{i}")));
    writer.write_record(&header)?;
    for row in table.rows() {
        let mut record = vec![row.instance_id.clone(), row.true_label.to_string()];
        record.extend(row.dist.probs().iter().map(|p| p.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
