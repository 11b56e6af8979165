//! The multi-split experiment harness.
//!
//! One declarative config drives the whole protocol: load a dataset, make
//! `split_count` random train/validation/test splits, optionally corrupt
//! train and validation labels, grid-search and fit every classifier on
//! the training part, rank models by validation accuracy to pick M1/M2,
//! fit the routing strategies on validation, and score everything on the
//! untouched test part.
//!
//! Every random choice flows from `base_seed`: split `s` uses seed
//! `base_seed + s`, and each stage below it (corruption, model fitting,
//! random ARC orderings) derives its own stream with [`derive_seed`], so
//! reruns are byte-identical and stages stay independent of which other
//! stages run. Grid search sees only the training part; validation is
//! reserved for model ranking and threshold fitting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arc::{self, ARCurve, ScoredOutcome};
use crate::data::{self, CorruptionOptions, Dataset, SchemaHints, SplitManifest, SplitSpec};
use crate::models::{self, ClassifierKind, ClassifierSpec, PredictionTable};
use crate::selection::{self, SelectionPolicy, Strategy};
use crate::{Error, Result};

/// Splitmix64-style mixing; gives each pipeline stage its own seed stream
/// from the per-split seed.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SALT_CORRUPT_TRAIN: u64 = 1;
const SALT_CORRUPT_VALIDATION: u64 = 2;
const SALT_ARC_RANDOM: u64 = 3;
const SALT_MODEL: u64 = 100;

/// Which parts label corruption applies to (test data is never touched).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptParts {
    pub train: bool,
    pub validation: bool,
}

impl Default for CorruptParts {
    fn default() -> Self {
        Self {
            train: true,
            validation: true,
        }
    }
}

/// Dataset location and schema hints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub label_column: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub continuous: Vec<String>,
}

impl DatasetConfig {
    pub fn hints(&self) -> SchemaHints {
        SchemaHints {
            categorical: self.categorical.iter().cloned().collect(),
            continuous: self.continuous.iter().cloned().collect(),
        }
    }
}

/// Hyperparameter grid for one classifier entry; single-valued lists pin a
/// parameter, multi-valued lists are searched by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    GaussianNb {
        #[serde(default = "default_variance_floor_grid")]
        variance_floor: Vec<f64>,
    },
    Knn {
        #[serde(default = "default_k_grid")]
        k: Vec<usize>,
    },
    RandomForest {
        #[serde(default = "default_tree_count_grid")]
        tree_count: Vec<usize>,
        /// 0 means unlimited depth.
        #[serde(default = "default_max_depth_grid")]
        max_depth: Vec<usize>,
        #[serde(default = "default_min_leaf_grid")]
        min_leaf: Vec<usize>,
    },
}

fn default_variance_floor_grid() -> Vec<f64> {
    vec![models::DEFAULT_VARIANCE_FLOOR]
}
fn default_k_grid() -> Vec<usize> {
    vec![5]
}
fn default_tree_count_grid() -> Vec<usize> {
    vec![25]
}
fn default_max_depth_grid() -> Vec<usize> {
    vec![0]
}
fn default_min_leaf_grid() -> Vec<usize> {
    vec![1]
}

impl GridSpec {
    /// Expands the cartesian product into concrete specs, all pinned to
    /// `seed`, so cross-validation compares hyperparameters under shared
    /// randomness.
    pub fn expand(&self, seed: u64) -> Result<Vec<ClassifierSpec>> {
        let specs: Vec<ClassifierSpec> = match self {
            GridSpec::GaussianNb { variance_floor } => variance_floor
                .iter()
                .map(|&vf| ClassifierSpec {
                    kind: ClassifierKind::GaussianNb { variance_floor: vf },
                    seed,
                })
                .collect(),
            GridSpec::Knn { k } => k
                .iter()
                .map(|&k| ClassifierSpec {
                    kind: ClassifierKind::Knn { k },
                    seed,
                })
                .collect(),
            GridSpec::RandomForest {
                tree_count,
                max_depth,
                min_leaf,
            } => {
                let mut specs = Vec::new();
                for &trees in tree_count {
                    for &depth in max_depth {
                        for &leaf in min_leaf {
                            specs.push(ClassifierSpec {
                                kind: ClassifierKind::RandomForest {
                                    tree_count: trees,
                                    max_depth: (depth > 0).then_some(depth),
                                    min_leaf: leaf,
                                },
                                seed,
                            });
                        }
                    }
                }
                specs
            }
        };
        if specs.is_empty() {
            return Err(Error::InvalidInput("empty hyperparameter grid".into()));
        }
        for spec in &specs {
            spec.validate()?;
        }
        Ok(specs)
    }
}

/// One classifier entry: a unique name (the model id in every output) and
/// its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub name: String,
    #[serde(flatten)]
    pub grid: GridSpec,
}

fn default_version() -> u32 {
    1
}
fn default_split_count() -> usize {
    15
}
fn default_proportions() -> (f64, f64, f64) {
    (0.7, 0.15, 0.15)
}
fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::SingleBest, Strategy::RsD, Strategy::RsI]
}
fn default_rhos() -> Vec<f64> {
    vec![0.0]
}
fn default_cv_folds() -> usize {
    5
}

/// The experiment configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Result-table dataset label; defaults to the dataset's own name.
    #[serde(default)]
    pub name: Option<String>,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    #[serde(default = "default_split_count")]
    pub split_count: usize,
    #[serde(default = "default_proportions")]
    pub proportions: (f64, f64, f64),
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_rhos")]
    pub rhos: Vec<f64>,
    #[serde(default)]
    pub corrupt_parts: CorruptParts,
    #[serde(default)]
    pub corrupt_exact_count: bool,
    #[serde(default)]
    pub corrupt_allow_unchanged: bool,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    pub classifiers: Vec<ClassifierConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::data(path.display().to_string(), 0, e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::InvalidInput(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.split_count == 0 {
            return Err(Error::InvalidInput("split_count must be >= 1".into()));
        }
        SplitSpec::new(self.proportions, 0)?;
        if self.rhos.is_empty() {
            return Err(Error::InvalidInput("rhos must not be empty".into()));
        }
        for &rho in &self.rhos {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::InvalidInput(format!("rho = {rho} outside [0, 1]")));
            }
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidInput("no classifiers configured".into()));
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.classifiers {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate classifier name {:?}",
                    c.name
                )));
            }
            c.grid.expand(0)?;
        }
        let needs_pair = self
            .strategies
            .iter()
            .any(|s| matches!(s, Strategy::RsD | Strategy::RsI));
        if needs_pair && self.classifiers.len() < 2 {
            return Err(Error::InvalidInput(
                "routing strategies need at least two classifiers".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidInput("cv_folds must be >= 2".into()));
        }
        Ok(())
    }

    fn corruption_options(&self) -> CorruptionOptions {
        CorruptionOptions {
            exact_count: self.corrupt_exact_count,
            allow_unchanged: self.corrupt_allow_unchanged,
        }
    }
}

/// One method's results at one corruption level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub rho: f64,
    pub method: String,
    pub mean_accuracy: f64,
    pub per_split: Vec<f64>,
    /// 1 when this method's mean accuracy strictly beats single-best.
    pub wins_vs_sb: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Machine-readable CSV, full float precision.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("dataset,rho,method,mean_accuracy,wins_vs_sb\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.dataset, row.rho, row.method, row.mean_accuracy, row.wins_vs_sb
            )
            .expect("writing to string");
        }
        out
    }

    /// Human-readable summary, five decimal places.
    pub fn summary_string(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<16} {:>6} {:<14} {:>12} {:>8}",
            "dataset", "rho", "method", "mean_acc", "wins_sb"
        )
        .unwrap();
        for row in &self.rows {
            writeln!(
                out,
                "{:<16} {:>6} {:<14} {:>12.5} {:>8}",
                row.dataset, row.rho, row.method, row.mean_accuracy, row.wins_vs_sb
            )
            .unwrap();
        }
        out
    }

    pub fn row(&self, rho: f64, method: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.rho == rho && r.method == method)
    }
}

/// Everything produced for one (split, rho) cell.
#[derive(Debug, Clone, Serialize)]
struct SplitSummary {
    split: usize,
    rho: f64,
    m1_id: String,
    m2_id: String,
    model_validation_accuracy: Vec<(String, f64)>,
    model_test_accuracy: Vec<(String, f64)>,
    strategy_test_accuracy: Vec<(String, f64)>,
}

struct SplitCell {
    summary: SplitSummary,
    manifest: SplitManifest,
    policies: Vec<(Strategy, SelectionPolicy)>,
    test_tables: Vec<PredictionTable>,
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::RsD => "rs_d",
        Strategy::RsI => "rs_i",
        Strategy::SingleBest => "single_best",
    }
}

/// Runs the full protocol from a config file reference, loading the dataset
/// from disk and writing artifacts under `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let dataset_config = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config has no [dataset] section".into()))?;
    let dataset = data::load_csv(
        &dataset_config.path,
        &dataset_config.label_column,
        &dataset_config.hints(),
    )?;
    run_with_dataset(config, &dataset)
}

/// Same as [`run_experiment`] but over an already-loaded dataset.
pub fn run_with_dataset(config: &ExperimentConfig, dataset: &Dataset) -> Result<ResultTable> {
    config.validate()?;
    let dataset_label = config.name.clone().unwrap_or_else(|| dataset.name.clone());

    let mut cells: Vec<SplitCell> = Vec::new();
    for split in 0..config.split_count {
        for &rho in &config.rhos {
            let cell = run_split(config, dataset, split, rho).map_err(|e| {
                Error::InvalidInput(format!("split {split}, rho {rho}: {e}"))
            })?;
            cells.push(cell);
        }
    }

    let table = assemble_table(config, &dataset_label, &cells);
    write_artifacts(config, &table, &cells)?;
    Ok(table)
}

fn run_split(
    config: &ExperimentConfig,
    dataset: &Dataset,
    split: usize,
    rho: f64,
) -> Result<SplitCell> {
    let split_seed = config.base_seed + split as u64;
    let spec = SplitSpec::new(config.proportions, split_seed)?;
    let manifest = data::split_indices(dataset.len(), &spec)?;

    let train = dataset.subset(&manifest.train);
    let validation = dataset.subset(&manifest.validation);
    let test = dataset.subset(&manifest.test);

    let train_labels = if config.corrupt_parts.train {
        data::corrupt_labels_with(
            &train.labels,
            rho,
            dataset.class_count,
            derive_seed(split_seed, SALT_CORRUPT_TRAIN),
            config.corruption_options(),
        )?
    } else {
        train.labels.clone()
    };
    let validation_labels = if config.corrupt_parts.validation {
        data::corrupt_labels_with(
            &validation.labels,
            rho,
            dataset.class_count,
            derive_seed(split_seed, SALT_CORRUPT_VALIDATION),
            config.corruption_options(),
        )?
    } else {
        validation.labels.clone()
    };

    let val_ids: Vec<String> = manifest.validation.iter().map(|i| i.to_string()).collect();
    let test_ids: Vec<String> = manifest.test.iter().map(|i| i.to_string()).collect();

    let mut val_tables = Vec::new();
    let mut test_tables = Vec::new();
    for (idx, classifier) in config.classifiers.iter().enumerate() {
        let model_seed = derive_seed(split_seed, SALT_MODEL + idx as u64);
        let grid = classifier.grid.expand(model_seed)?;
        let best = if grid.len() == 1 {
            grid.into_iter().next().expect("non-empty grid")
        } else {
            models::grid_search_cv(
                &grid,
                train.features.view(),
                &train_labels,
                dataset.class_count,
                config.cv_folds,
            )?
        };
        let model = models::fit(
            &best,
            train.features.view(),
            &train_labels,
            dataset.class_count,
        )?;
        val_tables.push(model.predict_table(
            &classifier.name,
            validation.features.view(),
            &val_ids,
            &validation_labels,
        )?);
        test_tables.push(model.predict_table(
            &classifier.name,
            test.features.view(),
            &test_ids,
            &test.labels,
        )?);
    }

    // Rank by validation accuracy; ties break by config order.
    let mut ranking: Vec<usize> = (0..val_tables.len()).collect();
    ranking.sort_by(|&a, &b| {
        val_tables[b]
            .accuracy()
            .total_cmp(&val_tables[a].accuracy())
            .then(a.cmp(&b))
    });
    let m1 = ranking[0];
    let m2 = ranking.get(1).copied();

    let mut policies = Vec::new();
    let mut strategy_acc = Vec::new();
    for &strategy in &config.strategies {
        let (policy, accuracy) = match strategy {
            Strategy::SingleBest => {
                let policy = SelectionPolicy::single_best(
                    val_tables[m1].model_id(),
                    m2.map_or("", |i| val_tables[i].model_id()),
                );
                (policy, test_tables[m1].accuracy())
            }
            Strategy::RsD | Strategy::RsI => {
                let m2 = m2.expect("validated: routing needs two classifiers");
                let policy = match strategy {
                    Strategy::RsD => selection::fit_rsd(&val_tables[m1], &val_tables[m2])?,
                    _ => selection::fit_rsi(&val_tables[m1], &val_tables[m2])?,
                };
                let routed =
                    selection::apply_policy(&policy, &test_tables[m1], &test_tables[m2])?;
                let accuracy = selection::routed_accuracy(&routed, &test_tables[m1])?;
                (policy, accuracy)
            }
        };
        strategy_acc.push((strategy_name(strategy).to_string(), accuracy));
        policies.push((strategy, policy));
    }

    let summary = SplitSummary {
        split,
        rho,
        m1_id: val_tables[m1].model_id().to_string(),
        m2_id: m2.map_or(String::new(), |i| val_tables[i].model_id().to_string()),
        model_validation_accuracy: val_tables
            .iter()
            .map(|t| (t.model_id().to_string(), t.accuracy()))
            .collect(),
        model_test_accuracy: test_tables
            .iter()
            .map(|t| (t.model_id().to_string(), t.accuracy()))
            .collect(),
        strategy_test_accuracy: strategy_acc,
    };
    Ok(SplitCell {
        summary,
        manifest,
        policies,
        test_tables,
    })
}

fn assemble_table(
    config: &ExperimentConfig,
    dataset_label: &str,
    cells: &[SplitCell],
) -> ResultTable {
    let mut rows = Vec::new();
    for &rho in &config.rhos {
        let at_rho: Vec<&SplitCell> = cells.iter().filter(|c| c.summary.rho == rho).collect();
        let mean = |per_split: &[f64]| per_split.iter().sum::<f64>() / per_split.len() as f64;

        // Single-best per split is M1's test accuracy, needed as the
        // baseline even when the strategy row itself is not requested.
        let sb_per_split: Vec<f64> = at_rho
            .iter()
            .map(|c| {
                let m1 = &c.summary.m1_id;
                c.summary
                    .model_test_accuracy
                    .iter()
                    .find(|(id, _)| id == m1)
                    .expect("m1 is a configured model")
                    .1
            })
            .collect();
        let sb_mean = mean(&sb_per_split);

        let mut push = |method: String, per_split: Vec<f64>| {
            let mean_accuracy = mean(&per_split);
            rows.push(ResultRow {
                dataset: dataset_label.to_string(),
                rho,
                method,
                mean_accuracy,
                per_split,
                wins_vs_sb: u32::from(mean_accuracy > sb_mean),
            });
        };

        for classifier in &config.classifiers {
            let per_split: Vec<f64> = at_rho
                .iter()
                .map(|c| {
                    c.summary
                        .model_test_accuracy
                        .iter()
                        .find(|(id, _)| id == &classifier.name)
                        .expect("every model evaluated")
                        .1
                })
                .collect();
            push(classifier.name.clone(), per_split);
        }
        for &strategy in &config.strategies {
            let name = strategy_name(strategy);
            let per_split: Vec<f64> = at_rho
                .iter()
                .map(|c| {
                    c.summary
                        .strategy_test_accuracy
                        .iter()
                        .find(|(id, _)| id == name)
                        .expect("every strategy evaluated")
                        .1
                })
                .collect();
            push(name.to_string(), per_split);
        }
    }
    ResultTable { rows }
}

fn write_artifacts(
    config: &ExperimentConfig,
    table: &ResultTable,
    cells: &[SplitCell],
) -> Result<()> {
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("result_table.csv"), table.to_csv_string())?;

    for cell in cells {
        let dir = out.join("splits").join(format!(
            "s{:02}_rho{}",
            cell.summary.split, cell.summary.rho
        ));
        fs::create_dir_all(&dir)?;
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&cell.manifest).expect("manifest serializes"),
        )?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&cell.summary).expect("summary serializes"),
        )?;
        for (strategy, policy) in &cell.policies {
            fs::write(
                dir.join(format!("policy_{}.json", strategy_name(*strategy))),
                policy.to_json(),
            )?;
        }
        for test_table in &cell.test_tables {
            let curve = arc::build_arc(&test_table.robustness_outcomes())?;
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            fs::write(dir.join(format!("arc_{}.csv", test_table.model_id())), buf)?;
        }
    }
    Ok(())
}

/// Instance-ordering keys for ARC comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderingKey {
    /// Ascending `r_cor` of the evaluated model's prediction.
    RobustnessCor,
    /// Seeded uniform scores; the uninformative baseline.
    Random,
    /// Scores joined from a CSV file with header `instance_id,score`.
    ExternalScores(PathBuf),
}

impl OrderingKey {
    pub fn label(&self) -> &'static str {
        match self {
            OrderingKey::RobustnessCor => "robustness_cor",
            OrderingKey::Random => "random",
            OrderingKey::ExternalScores(_) => "external",
        }
    }
}

/// Per-key average ARC over all splits, using the best-by-validation model
/// on each split's test set (no label corruption in this protocol). Writes
/// one CSV per key plus a combined SVG under the output directory.
pub fn arc_compare(
    config: &ExperimentConfig,
    dataset: &Dataset,
    keys: &[OrderingKey],
) -> Result<Vec<(String, ARCurve)>> {
    config.validate()?;
    if keys.is_empty() {
        return Err(Error::InvalidInput("no ordering keys".into()));
    }
    let external: Option<HashMap<String, f64>> = keys
        .iter()
        .find_map(|k| match k {
            OrderingKey::ExternalScores(path) => Some(load_score_file(path)),
            _ => None,
        })
        .transpose()?;

    let mut per_key: Vec<Vec<ARCurve>> = vec![Vec::new(); keys.len()];
    for split in 0..config.split_count {
        let cell = run_split(config, dataset, split, 0.0)?;
        let m1_table = cell
            .test_tables
            .iter()
            .find(|t| t.model_id() == cell.summary.m1_id)
            .expect("m1 evaluated");
        let split_seed = config.base_seed + split as u64;
        for (key, curves) in keys.iter().zip(&mut per_key) {
            let outcomes = match key {
                OrderingKey::RobustnessCor => m1_table.robustness_outcomes(),
                OrderingKey::Random => {
                    use rand::{Rng, SeedableRng};
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                        split_seed,
                        SALT_ARC_RANDOM,
                    ));
                    m1_table
                        .rows()
                        .iter()
                        .map(|r| {
                            ScoredOutcome::new(
                                r.instance_id.clone(),
                                rng.gen::<f64>(),
                                r.dist.argmax() == r.true_label,
                            )
                        })
                        .collect()
                }
                OrderingKey::ExternalScores(path) => {
                    let scores = external.as_ref().expect("loaded above");
                    m1_table
                        .rows()
                        .iter()
                        .map(|r| {
                            scores
                                .get(&r.instance_id)
                                .map(|&s| {
                                    ScoredOutcome::new(
                                        r.instance_id.clone(),
                                        s,
                                        r.dist.argmax() == r.true_label,
                                    )
                                })
                                .ok_or_else(|| {
                                    Error::data(
                                        path.display().to_string(),
                                        0,
                                        format!("no score for instance {:?}", r.instance_id),
                                    )
                                })
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            curves.push(arc::build_arc(&outcomes)?);
        }
    }

    let mut averaged = Vec::new();
    for (key, curves) in keys.iter().zip(&per_key) {
        averaged.push((
            key.label().to_string(),
            arc::average_arcs(curves, arc::DEFAULT_AVERAGE_GRID)?,
        ));
    }

    fs::create_dir_all(&config.output_dir)?;
    for (label, curve) in &averaged {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        fs::write(config.output_dir.join(format!("arc_{label}.csv")), buf)?;
    }
    let labeled: Vec<(String, &ARCurve)> = averaged
        .iter()
        .map(|(label, curve)| (label.clone(), curve))
        .collect();
    fs::write(
        config.output_dir.join("arc_compare.svg"),
        arc::svg_line_plot(&labeled),
    )?;
    Ok(averaged)
}

/// Reads an `instance_id,score` CSV.
pub fn load_score_file(path: &Path) -> Result<HashMap<String, f64>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::data(path.display().to_string(), 0, e.to_string()))?;
    parse_score_csv(file, &path.display().to_string())
}

pub fn parse_score_csv(reader: impl Read, source: &str) -> Result<HashMap<String, f64>> {
    let mut csv_reader = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::data(source, 1, e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "instance_id" || &headers[1] != "score" {
        return Err(Error::data(source, 1, "header must be instance_id,score"));
    }
    let mut scores = HashMap::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::data(source, 0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let score: f64 = record[1]
            .parse()
            .map_err(|_| Error::data(source, line, format!("bad score {:?}", &record[1])))?;
        if score.is_nan() {
            return Err(Error::data(source, line, "score is NaN"));
        }
        if scores.insert(record[0].to_string(), score).is_some() {
            return Err(Error::data(
                source,
                line,
                format!("duplicate instance id {:?}", &record[0]),
            ));
        }
    }
    Ok(scores)
}
