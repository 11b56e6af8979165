//! `robcor` — robustness scoring, accuracy-rejection curves and
//! robustness-based dynamic selection from the command line.
//!
//! Machine-readable results go to files, a short human summary to stdout.
//! Exit codes: 0 success, 1 failed verification or internal error, 2 usage
//! error, 3 data/validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robcor::arc::{self, ScoredOutcome};
use robcor::data::{self, CorruptionOptions, SplitSpec};
use robcor::experiment::{self, ExperimentConfig, OrderingKey};
use robcor::metrics;
use robcor::models::{self, PredictionTable};
use robcor::oracle::{self, FiniteJointModel};
use robcor::selection::{self, SelectionPolicy};
use robcor::Error;

#[derive(Parser)]
#[command(
    name = "robcor",
    version,
    about = "Robustness quantification for probabilistic classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction CSV with per-instance robustness values.
    Score(ScoreArgs),
    /// Build accuracy-rejection curves.
    Arc(ArcArgs),
    /// Fit and apply dynamic-selection policies.
    #[command(subcommand)]
    Ds(DsCommand),
    /// Dataset utilities: seeded splits and label corruption.
    #[command(subcommand)]
    Data(DataCommand),
    /// Numerically verify the closed-form robustness on finite spaces.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Run the full multi-split experiment protocol.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct ScoreArgs {
    /// Prediction CSV (instance_id,true_label,p_0,...).
    #[arg(long)]
    preds: PathBuf,
    /// Output robustness CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KeyArg {
    RobustnessCor,
    Random,
    External,
}

#[derive(Args)]
struct ArcArgs {
    /// Prediction CSV for a single-table curve.
    #[arg(long, conflicts_with = "config")]
    preds: Option<PathBuf>,
    /// Experiment config for a multi-split curve comparison.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ordering keys to build curves for.
    #[arg(long, value_delimiter = ',', default_values = ["robustness-cor"])]
    keys: Vec<KeyArg>,
    /// Scores CSV (instance_id,score) for the external key.
    #[arg(long)]
    score_file: Option<PathBuf>,
    /// Seed for the random ordering key (single-table mode).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (single-table mode, one key only).
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Optional SVG plot path (single-table mode).
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DsCommand {
    /// Fit a routing policy on validation prediction tables.
    Fit(DsFitArgs),
    /// Apply a fitted policy to test prediction tables.
    Apply(DsApplyArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    RsD,
    RsI,
}

#[derive(Args)]
struct DsFitArgs {
    /// Validation predictions of the first model.
    #[arg(long)]
    m1: PathBuf,
    /// Validation predictions of the second model.
    #[arg(long)]
    m2: PathBuf,
    #[arg(long)]
    strategy: StrategyArg,
    /// Output policy JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DsApplyArgs {
    /// Policy JSON produced by `ds fit`.
    #[arg(long)]
    policy: PathBuf,
    /// Test predictions of the policy's M1 model.
    #[arg(long)]
    m1: PathBuf,
    /// Test predictions of the policy's M2 model.
    #[arg(long)]
    m2: PathBuf,
    /// Output routed-prediction CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DataCommand {
    /// Shuffle a CSV into train/validation/test files plus a manifest.
    Split(DataSplitArgs),
    /// Corrupt a proportion of the label column.
    Corrupt(DataCorruptArgs),
}

#[derive(Args)]
struct DataSplitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated train,validation,test proportions.
    #[arg(long, default_value = "0.7,0.15,0.15")]
    proportions: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DataCorruptArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    label_column: String,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Corrupt exactly floor(rho * n) rows instead of Bernoulli selection.
    #[arg(long)]
    exact_count: bool,
    /// Redraw over all classes, so a selected label may stay unchanged.
    #[arg(long)]
    allow_unchanged: bool,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Check witness tightness and the flip search on random joint models.
    Verify(OracleVerifyArgs),
}

#[derive(Args)]
struct OracleVerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 4)]
    features: usize,
    #[arg(long, default_value_t = oracle::DEFAULT_SEARCH_BUDGET)]
    budget: usize,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the configured protocol and write all artifacts.
    Run(ExperimentRunArgs),
}

#[derive(Args)]
struct ExperimentRunArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> robcor::Result<ExitCode> {
    match cli.command {
        Command::Score(args) => score(&args),
        Command::Arc(args) => arc_command(&args),
        Command::Ds(DsCommand::Fit(args)) => ds_fit(&args),
        Command::Ds(DsCommand::Apply(args)) => ds_apply(&args),
        Command::Data(DataCommand::Split(args)) => data_split(&args),
        Command::Data(DataCommand::Corrupt(args)) => data_corrupt(&args),
        Command::Oracle(OracleCommand::Verify(args)) => Ok(oracle_verify(&args)),
        Command::Experiment(ExperimentCommand::Run(args)) => experiment_run(&args),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string())
}

fn format_extended(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        v.to_string()
    }
}

fn score(args: &ScoreArgs) -> robcor::Result<ExitCode> {
    let table = models::read_prediction_csv(&args.preds, &file_stem(&args.preds))?;
    let mut writer = csv::Writer::from_path(&args.out)?;
    writer.write_record([
        "instance_id",
        "true_label",
        "predicted_class",
        "correct",
        "r_cor",
        "r_star",
    ])?;
    for row in table.rows() {
        let s = metrics::robustness(&row.dist);
        writer.write_record([
            row.instance_id.clone(),
            row.true_label.to_string(),
            s.top.to_string(),
            (s.top == row.true_label).to_string(),
            s.r_cor.to_string(),
            format_extended(s.r_star),
        ])?;
    }
    writer.flush()?;
    println!(
        "scored {} instances from {} (accuracy {:.5}) -> {}",
        table.len(),
        args.preds.display(),
        table.accuracy(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_keys(args: &ArcArgs) -> robcor::Result<Vec<OrderingKey>> {
    args.keys
        .iter()
        .map(|k| match k {
            KeyArg::RobustnessCor => Ok(OrderingKey::RobustnessCor),
            KeyArg::Random => Ok(OrderingKey::Random),
            KeyArg::External => args
                .score_file
                .clone()
                .map(OrderingKey::ExternalScores)
                .ok_or_else(|| {
                    Error::InvalidInput("the external key needs --score-file".into())
                }),
        })
        .collect()
}

fn arc_command(args: &ArcArgs) -> robcor::Result<ExitCode> {
    match (&args.preds, &args.config) {
        (Some(preds), None) => arc_single(args, preds),
        (None, Some(config)) => arc_multi(args, config),
        _ => Err(Error::InvalidInput(
            "pass exactly one of --preds or --config".into(),
        )),
    }
}

fn arc_single(args: &ArcArgs, preds: &Path) -> robcor::Result<ExitCode> {
    let out_csv = args
        .out_csv
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("single-table mode needs --out-csv".into()))?;
    let keys = parse_keys(args)?;
    if keys.len() != 1 {
        return Err(Error::InvalidInput(
            "single-table mode takes exactly one key".into(),
        ));
    }
    let table = models::read_prediction_csv(preds, &file_stem(preds))?;
    let outcomes = match &keys[0] {
        OrderingKey::RobustnessCor => table.robustness_outcomes(),
        OrderingKey::Random => {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            table
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
            let scores = experiment::load_score_file(path)?;
            table
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
                .collect::<robcor::Result<Vec<_>>>()?
        }
    };
    let curve = arc::build_arc(&outcomes)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    std::fs::write(out_csv, buf)?;
    if let Some(svg) = &args.out_svg {
        let labeled = vec![(keys[0].label().to_string(), &curve)];
        std::fs::write(svg, arc::svg_line_plot(&labeled))?;
    }
    println!(
        "arc over {} instances: base accuracy {:.5}, accuracy at half rejection {:.5} -> {}",
        table.len(),
        curve.base_accuracy(),
        curve.value_at(0.5),
        out_csv.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn arc_multi(args: &ArcArgs, config_path: &Path) -> robcor::Result<ExitCode> {
    let config = ExperimentConfig::load(config_path)?;
    let dataset_config = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config has no [dataset] section".into()))?;
    let dataset = data::load_csv(
        &dataset_config.path,
        &dataset_config.label_column,
        &dataset_config.hints(),
    )?;
    let keys = parse_keys(args)?;
    let curves = experiment::arc_compare(&config, &dataset, &keys)?;
    for (label, curve) in &curves {
        println!(
            "{label}: base {:.5}, at 25% rejection {:.5}, at 50% rejection {:.5}",
            curve.base_accuracy(),
            curve.value_at(0.25),
            curve.value_at(0.5)
        );
    }
    println!("curves written under {}", config.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn ds_fit(args: &DsFitArgs) -> robcor::Result<ExitCode> {
    let a = models::read_prediction_csv(&args.m1, &file_stem(&args.m1))?;
    let b = models::read_prediction_csv(&args.m2, &file_stem(&args.m2))?;
    // The policy's M1 must be the higher-accuracy model; ties keep the
    // order given on the command line.
    let (m1, m2) = if b.accuracy() > a.accuracy() {
        (&b, &a)
    } else {
        (&a, &b)
    };
    let policy = match args.strategy {
        StrategyArg::RsD => selection::fit_rsd(m1, m2)?,
        StrategyArg::RsI => selection::fit_rsi(m1, m2)?,
    };
    std::fs::write(&args.out, policy.to_json())?;
    let path_of = |id: &str| {
        if id == file_stem(&args.m1) {
            args.m1.display().to_string()
        } else {
            args.m2.display().to_string()
        }
    };
    println!(
        "fitted {} with m1 = {} (val acc {:.5}), m2 = {} (val acc {:.5}); threshold {} -> {}",
        args.strategy.to_possible_value().unwrap().get_name(),
        path_of(m1.model_id()),
        m1.accuracy(),
        path_of(m2.model_id()),
        m2.accuracy(),
        format_extended(policy.threshold),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn ds_apply(args: &DsApplyArgs) -> robcor::Result<ExitCode> {
    let policy = SelectionPolicy::from_json(&std::fs::read_to_string(&args.policy)?)?;
    // Positional contract: --m1 is the policy's M1 table whatever the file
    // is called, so say which file plays which role.
    println!(
        "applying {} with m1 = {} ({}), m2 = {} ({})",
        args.policy.display(),
        args.m1.display(),
        policy.m1_id,
        args.m2.display(),
        policy.m2_id
    );
    let m1 = models::read_prediction_csv(&args.m1, &policy.m1_id)?;
    let m2 = models::read_prediction_csv(&args.m2, &policy.m2_id)?;
    let routed = selection::apply_policy(&policy, &m1, &m2)?;
    let mut writer = csv::Writer::from_path(&args.out)?;
    writer.write_record(["instance_id", "chosen_model", "predicted_class", "ratio"])?;
    for r in &routed {
        writer.write_record([
            r.instance_id.clone(),
            r.chosen_model.clone(),
            r.predicted_class.to_string(),
            format_extended(r.ratio),
        ])?;
    }
    writer.flush()?;
    let to_m2 = routed
        .iter()
        .filter(|r| r.chosen_model == policy.m2_id)
        .count();
    println!(
        "routed {} instances ({} to {}), accuracy {:.5} -> {}",
        routed.len(),
        to_m2,
        policy.m2_id,
        selection::routed_accuracy(&routed, &m1)?,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_proportions(text: &str) -> robcor::Result<(f64, f64, f64)> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("bad proportions {text:?}")))?;
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "proportions need 3 comma-separated values, got {text:?}"
        )));
    }
    Ok((parts[0], parts[1], parts[2]))
}

/// Reads a headered CSV as raw records.
fn read_raw_csv(path: &Path) -> robcor::Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::data(path.display().to_string(), 0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(path.display().to_string(), 1, e.to_string()))?
        .clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(|e| Error::data(path.display().to_string(), 0, e.to_string()))?);
    }
    Ok((headers, rows))
}

fn write_raw_csv(
    path: &Path,
    headers: &csv::StringRecord,
    rows: impl Iterator<Item = csv::StringRecord>,
) -> robcor::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn data_split(args: &DataSplitArgs) -> robcor::Result<ExitCode> {
    let (headers, rows) = read_raw_csv(&args.input)?;
    let spec = SplitSpec::new(parse_proportions(&args.proportions)?, args.seed)?;
    let manifest = data::split_indices(rows.len(), &spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    for (name, indices) in [
        ("train.csv", &manifest.train),
        ("validation.csv", &manifest.validation),
        ("test.csv", &manifest.test),
    ] {
        write_raw_csv(
            &args.out_dir.join(name),
            &headers,
            indices.iter().map(|&i| rows[i].clone()),
        )?;
    }
    std::fs::write(
        args.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!(
        "split {} rows into {}/{}/{} -> {}",
        rows.len(),
        manifest.train.len(),
        manifest.validation.len(),
        manifest.test.len(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn data_corrupt(args: &DataCorruptArgs) -> robcor::Result<ExitCode> {
    let (headers, rows) = read_raw_csv(&args.input)?;
    let label_idx = headers
        .iter()
        .position(|h| h == args.label_column)
        .ok_or_else(|| {
            Error::data(
                args.input.display().to_string(),
                1,
                format!("label column {:?} not in header", args.label_column),
            )
        })?;

    // Map observed label strings to indices in first-appearance order.
    let mut names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(rows.len());
    for row in &rows {
        let v = row[label_idx].to_string();
        let idx = names.iter().position(|n| *n == v).unwrap_or_else(|| {
            names.push(v.clone());
            names.len() - 1
        });
        labels.push(idx);
    }
    let corrupted = data::corrupt_labels_with(
        &labels,
        args.rho,
        names.len(),
        args.seed,
        CorruptionOptions {
            exact_count: args.exact_count,
            allow_unchanged: args.allow_unchanged,
        },
    )?;

    let rewritten = rows.iter().zip(&corrupted).map(|(row, &label)| {
        let mut fields: Vec<String> = row.iter().map(str::to_string).collect();
        fields[label_idx] = names[label].clone();
        csv::StringRecord::from(fields)
    });
    write_raw_csv(&args.out, &headers, rewritten)?;
    let changed = labels
        .iter()
        .zip(&corrupted)
        .filter(|(a, b)| a != b)
        .count();
    println!(
        "corrupted {changed} of {} labels (rho = {}) -> {}",
        rows.len(),
        args.rho,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn oracle_verify(args: &OracleVerifyArgs) -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut max_witness_gap = 0.0f64;
    let mut max_tie_gap = 0.0f64;
    let mut failures = 0usize;
    for trial in 0..args.trials {
        let model = FiniteJointModel::random(args.classes, args.features, &mut rng);
        let mut trial_ok = true;
        for x in 0..args.features {
            let r = model
                .column_robustness(x)
                .expect("column in range")
                .r_star;
            let check = verify_column(&model, x, r, args.budget, args.seed, trial);
            match check {
                Ok((witness_gap, tie_gap)) => {
                    max_witness_gap = max_witness_gap.max(witness_gap);
                    max_tie_gap = max_tie_gap.max(tie_gap);
                }
                Err(reason) => {
                    println!("trial {trial:03} column {x}: FAIL ({reason})");
                    trial_ok = false;
                }
            }
        }
        if trial_ok {
            println!("trial {trial:03}: ok ({} columns)", args.features);
        } else {
            failures += 1;
        }
    }
    if failures == 0 {
        println!(
            "PASS: {} trials, max |dstar - r_star| = {max_witness_gap:.3e}, \
             max conditional tie gap = {max_tie_gap:.3e}",
            args.trials
        );
        ExitCode::SUCCESS
    } else {
        println!("FAIL: {failures} of {} trials violated the closed form", args.trials);
        ExitCode::from(1)
    }
}

/// One column's checks; returns (witness dissimilarity gap, tie gap).
fn verify_column(
    model: &FiniteJointModel,
    x: usize,
    r_star: f64,
    budget: usize,
    seed: u64,
    trial: usize,
) -> Result<(f64, f64), String> {
    let (witness, q) =
        oracle::build_witness(model, x).map_err(|e| format!("witness failed: {e}"))?;
    if (witness.expected_likelihood_ratio() - 1.0).abs() > 1e-12 {
        return Err("witness likelihood ratio does not integrate to 1".into());
    }
    let attained = oracle::dstar_finite(model, &q).map_err(|e| e.to_string())?;
    let witness_gap = (attained - r_star).abs();
    if witness_gap > 1e-9 * r_star.max(1.0) {
        return Err(format!(
            "witness dissimilarity {attained} misses r_star {r_star}"
        ));
    }
    let cond = q.conditional(x).map_err(|e| e.to_string())?;
    let tie_gap = (cond[witness.top] - cond[witness.runner_up]).abs();
    if tie_gap > 1e-9 {
        return Err(format!("witness conditional not tied (gap {tie_gap})"));
    }
    let found =
        oracle::min_flipping_dissimilarity(model, x, budget, seed ^ (trial as u64) << 16)
            .map_err(|e| e.to_string())?;
    if found < r_star * (1.0 - 1e-9) {
        return Err(format!(
            "search found a flipping perturbation at {found}, below r_star {r_star}"
        ));
    }
    if found > r_star * (1.0 + 1e-9) + 1e-9 {
        return Err(format!(
            "search missed the witness ray: best {found} vs r_star {r_star}"
        ));
    }
    Ok((witness_gap, tie_gap))
}

fn experiment_run(args: &ExperimentRunArgs) -> robcor::Result<ExitCode> {
    let config = ExperimentConfig::load(&args.config)?;
    let table = experiment::run_experiment(&config)?;
    print!("{}", table.summary_string());
    println!(
        "result table and per-split artifacts written under {}",
        config.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}
