//! Command-line wiring: simulation, feature extraction, training, evaluation
//! and report emission.
//!
//! Corpus directory layout (written by `simulate`, read by the other
//! commands): `communities.json` (id, label, account count, date range per
//! community), `events/<community_id>.jsonl` event streams, and
//! `manifest.json` with the scripted ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::forest::{ForestModel, DEFAULT_TREES};
use crate::harness::{
    self, ClassRatio, CommunityCorpus, ExperimentResult, ExperimentSpec, Task,
    DEFAULT_THRESHOLD_SECS, DEFAULT_WINDOW_N,
};
use crate::ingest::{parse_events, partition_by_day, ParseMode, TweetEvent};
use crate::metrics::{curves, error_histogram, write_curve_csv, PredictionRow};
use crate::netbuild::{
    build_all, oracle_edges, sweep_edges, CoRetweetKey, PatternItem, PatternKind,
};
use crate::netstats::{
    activity_series, feature_names, read_feature_csv, write_feature_csv, Aggregation, Label,
};
use crate::rng::derive_rng;
use crate::synthgen::{generate, scenario_library, GeneratedCommunity, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(
    name = "coordnet",
    version,
    about = "Coordination-network features and a random-forest harness for SIO-like activity detection"
)]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic labeled corpus with a ground-truth manifest.
    Simulate(SimulateArgs),
    /// Build per-day feature vectors from a corpus of event streams.
    BuildFeatures(BuildFeaturesArgs),
    /// Train a random forest on a feature CSV and save the model.
    Train(TrainArgs),
    /// Run a Task 1 or Task 2 experiment and write the results documents.
    Evaluate(EvaluateArgs),
    /// Emit activity time series (and model feature importance) CSVs.
    Report(ReportArgs),
    /// Cross-check the sliding-window pair builder against the brute-force
    /// oracle on random inputs.
    OracleCheck(OracleCheckArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Library scenario name (A, B, C, D or E).
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario config file (JSON) instead of a library scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the scenario's baked-in seed.
    #[arg(long, env = "COORDNET_SEED")]
    pub seed: Option<u64>,
    /// Output corpus directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BuildFeaturesArgs {
    /// Corpus directory (communities.json + events/).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output feature CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "daily")]
    pub aggregation: Aggregation,
    /// Coordination time threshold in seconds.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_SECS)]
    pub threshold: i64,
    /// Key co-retweets by the retweeted tweet or the retweeted author.
    #[arg(long, default_value = "tweet")]
    pub coretweet_key: CoRetweetKey,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature CSV (as written by build-features).
    #[arg(long)]
    pub features: PathBuf,
    /// Rows to train on: daily or weekly.
    #[arg(long, default_value = "daily")]
    pub aggregation: Aggregation,
    /// Number of trees in the ensemble.
    #[arg(long, default_value_t = DEFAULT_TREES)]
    pub trees: usize,
    #[arg(long, env = "COORDNET_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Output model path (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Corpus directory of raw event streams.
    #[arg(long, conflicts_with = "features")]
    pub corpus: Option<PathBuf>,
    /// Feature CSV to evaluate on instead of raw events.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Experiment config file (JSON); replaces the individual flags below.
    #[arg(long, conflicts_with_all = ["corpus", "features"])]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    pub task: Task,
    #[arg(long, default_value = "2:18")]
    pub ratio: ClassRatio,
    #[arg(long, default_value = "daily")]
    pub aggregation: Aggregation,
    /// Sliding-window size N in days.
    #[arg(long, default_value_t = DEFAULT_WINDOW_N)]
    pub window: usize,
    /// Coordination time threshold in seconds.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_SECS)]
    pub threshold: i64,
    #[arg(long, default_value_t = DEFAULT_TREES)]
    pub trees: usize,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    pub seeds: Vec<u64>,
    /// First day of the considered range (default: corpus intersection).
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Last day of the considered range (default: corpus intersection).
    #[arg(long)]
    pub end: Option<NaiveDate>,
    #[arg(long, default_value = "tweet")]
    pub coretweet_key: CoRetweetKey,
    /// Record train/test window bounds for a leakage audit.
    #[arg(long)]
    pub audit: bool,
    /// Output directory for results.json, predictions.csv and curve CSVs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Corpus directory of raw event streams.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_SECS)]
    pub threshold: i64,
    #[arg(long, default_value = "tweet")]
    pub coretweet_key: CoRetweetKey,
    /// Trained model; adds an importance.csv to the report.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    /// Number of random item streams to check.
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    /// Maximum items per stream.
    #[arg(long, default_value_t = 2000)]
    pub max_items: usize,
    /// Maximum distinct keys per stream.
    #[arg(long, default_value_t = 20)]
    pub max_keys: usize,
    #[arg(long, env = "COORDNET_SEED", default_value_t = 1)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::BuildFeatures(args) => cmd_build_features(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Report(args) => cmd_report(&args),
        Command::OracleCheck(args) => cmd_oracle_check(&args),
    }
}

// ---------------------------------------------------------------------------
// corpus directory layout

fn events_path(dir: &Path, community_id: &str) -> PathBuf {
    dir.join("events").join(format!("{community_id}.jsonl"))
}

fn write_corpus_dir(dir: &Path, config: &ScenarioConfig) -> Result<(u64, usize)> {
    let corpus = generate(config)?;
    fs::create_dir_all(dir.join("events"))
        .with_context(|| format!("creating {}", dir.join("events").display()))?;

    let mut total_events = 0u64;
    for community in &corpus.communities {
        let path = events_path(dir, &community.community_id);
        let mut out = String::new();
        for event in &community.events {
            out.push_str(&event.to_json_line());
            out.push('\n');
        }
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        total_events += community.events.len() as u64;
    }

    let communities_json = serde_json::to_string_pretty(&corpus.communities)?;
    fs::write(dir.join("communities.json"), communities_json)?;
    let manifest_json = serde_json::to_string_pretty(&corpus.manifest)?;
    fs::write(dir.join("manifest.json"), manifest_json)?;

    let manifest_entries = corpus.manifest.entries().count();
    Ok((total_events, manifest_entries))
}

fn read_corpus_dir(
    dir: &Path,
    mode: ParseMode,
) -> Result<(Vec<(String, Label, Vec<TweetEvent>)>, u64)> {
    let communities_path = dir.join("communities.json");
    let text = fs::read_to_string(&communities_path)
        .with_context(|| format!("reading {}", communities_path.display()))?;
    let communities: Vec<GeneratedCommunity> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", communities_path.display()))?;

    let mut streams = Vec::new();
    let mut skipped = 0u64;
    for community in &communities {
        let path = events_path(dir, &community.community_id);
        let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
        let outcome = parse_events(BufReader::new(file), mode)
            .with_context(|| format!("parsing {}", path.display()))?;
        skipped += outcome.skipped.len() as u64;
        streams.push((community.community_id.clone(), community.label, outcome.events));
    }
    Ok((streams, skipped))
}

/// Labels by community id, as recorded in a corpus directory.
pub fn corpus_labels(dir: &Path) -> Result<BTreeMap<String, Label>> {
    let communities_path = dir.join("communities.json");
    let text = fs::read_to_string(&communities_path)
        .with_context(|| format!("reading {}", communities_path.display()))?;
    let communities: Vec<GeneratedCommunity> = serde_json::from_str(&text)?;
    Ok(communities
        .into_iter()
        .map(|c| (c.community_id, c.label))
        .collect())
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = match (&args.scenario, &args.config) {
        (Some(name), None) => {
            let library = scenario_library();
            let names: Vec<String> = library.keys().cloned().collect();
            library
                .get(&name.to_uppercase())
                .cloned()
                .ok_or_else(|| {
                    anyhow!("unknown scenario {name}; available: {}", names.join(", "))
                })?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        _ => bail!("pass exactly one of --scenario or --config"),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let (events, manifest_entries) = write_corpus_dir(&args.out, &config)?;
    println!(
        "scenario {}: {} communities, {events} events, {manifest_entries} scripted coordination entries -> {}",
        config.name,
        config.communities.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// build-features

fn cmd_build_features(args: &BuildFeaturesArgs) -> Result<()> {
    let mode = if args.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let (streams, skipped) = read_corpus_dir(&args.corpus, mode)?;
    let n_communities = streams.len();
    let corpus = CommunityCorpus::from_event_streams(streams, args.threshold, args.coretweet_key)?;

    let mut rows = Vec::new();
    for stream in corpus.streams() {
        rows.extend(stream.feature_vectors(args.aggregation));
    }
    rows.sort_by(|a, b| (&a.community_id, a.date).cmp(&(&b.community_id, b.date)));

    let file = fs::File::create(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    write_feature_csv(file, &rows)?;
    println!(
        "{n_communities} communities, {} {} rows, {skipped} skipped records -> {}",
        rows.len(),
        args.aggregation,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let file = fs::File::open(&args.features)
        .with_context(|| format!("reading {}", args.features.display()))?;
    let rows = read_feature_csv(BufReader::new(file))?;
    let selected: Vec<_> = rows
        .into_iter()
        .filter(|r| r.aggregation == args.aggregation)
        .collect();
    if selected.is_empty() {
        bail!("{} has no {} rows", args.features.display(), args.aggregation);
    }
    let x: Vec<Vec<f64>> = selected.iter().map(|r| r.values.clone()).collect();
    let y: Vec<Label> = selected.iter().map(|r| r.label).collect();
    let model = ForestModel::train(&x, &y, args.trees, args.seed)?;
    fs::write(&args.out, model.to_json())
        .with_context(|| format!("writing {}", args.out.display()))?;

    let names = feature_names();
    let importance = model.feature_importance();
    let mut ranked: Vec<(usize, f64)> = importance.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!(
        "trained {} trees on {} rows ({} sio / {} non-sio), seed {} -> {}",
        model.n_trees,
        x.len(),
        model.training_meta.positive_rows,
        model.training_meta.negative_rows,
        model.seed,
        args.out.display()
    );
    println!("top features by impurity decrease:");
    for (index, value) in ranked.iter().take(5) {
        println!("  {:<22} {value:.4}", names[*index]);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

/// Experiment config file: an [`ExperimentSpec`] plus the corpus location.
#[derive(Debug, Serialize, Deserialize)]
struct ExperimentFile {
    #[serde(default)]
    corpus: Option<PathBuf>,
    #[serde(default)]
    features: Option<PathBuf>,
    #[serde(default)]
    coretweet_key: CoRetweetKey,
    #[serde(flatten)]
    spec: ExperimentSpec,
}

fn load_eval_corpus(
    corpus: Option<&Path>,
    features: Option<&Path>,
    threshold: i64,
    coretweet_key: CoRetweetKey,
) -> Result<CommunityCorpus> {
    match (corpus, features) {
        (Some(dir), None) => {
            let (streams, _) = read_corpus_dir(dir, ParseMode::Lenient)?;
            Ok(CommunityCorpus::from_event_streams(streams, threshold, coretweet_key)?)
        }
        (None, Some(path)) => {
            let file =
                fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
            let rows = read_feature_csv(BufReader::new(file))?;
            Ok(CommunityCorpus::from_feature_rows(rows)?)
        }
        _ => bail!("pass exactly one of --corpus or --features"),
    }
}

/// Intersection of all stream ranges: the span every community covers.
fn corpus_date_range(corpus: &CommunityCorpus) -> Result<(NaiveDate, NaiveDate)> {
    let first = corpus.streams().map(|s| s.first).max();
    let last = corpus.streams().map(|s| s.last).min();
    match (first, last) {
        (Some(first), Some(last)) if first <= last => Ok((first, last)),
        (Some(_), Some(_)) => bail!("corpus communities share no common date range"),
        _ => bail!("corpus has no communities"),
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (spec, corpus) = if let Some(config_path) = &args.config {
        let text = fs::read_to_string(config_path)
            .with_context(|| format!("reading {}", config_path.display()))?;
        let file: ExperimentFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", config_path.display()))?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        let resolve =
            |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        let corpus = load_eval_corpus(
            file.corpus.as_ref().map(&resolve).as_deref(),
            file.features.as_ref().map(&resolve).as_deref(),
            file.spec.threshold_secs,
            file.coretweet_key,
        )?;
        (file.spec, corpus)
    } else {
        let corpus = load_eval_corpus(
            args.corpus.as_deref(),
            args.features.as_deref(),
            args.threshold,
            args.coretweet_key,
        )?;
        let date_range = match (args.start, args.end) {
            (Some(start), Some(end)) => (start, end),
            (None, None) => corpus_date_range(&corpus)?,
            (start, end) => {
                let default = corpus_date_range(&corpus)?;
                (start.unwrap_or(default.0), end.unwrap_or(default.1))
            }
        };
        let spec = ExperimentSpec {
            task: args.task,
            aggregation: args.aggregation,
            ratio: args.ratio,
            window_n: args.window,
            threshold_secs: args.threshold,
            n_trees: args.trees,
            seeds: args.seeds.clone(),
            date_range,
            tuning_range: None,
            audit: args.audit,
        };
        (spec, corpus)
    };

    let result = harness::run(&spec, &corpus)?;
    write_result_documents(&args.out, &result)?;

    let s = &result.summary;
    println!(
        "task {} {} {} over {} groups: F1 {:.3} ({:.3},{:.3})  P {:.3} ({:.3},{:.3})  R {:.3} ({:.3},{:.3})  [{} skipped days] -> {}",
        result.task,
        result.aggregation,
        result.ratio,
        result.group_count,
        s.f1.mean,
        s.f1.ci_low,
        s.f1.ci_high,
        s.precision.mean,
        s.precision.ci_low,
        s.precision.ci_high,
        s.recall.mean,
        s.recall.ci_low,
        s.recall.ci_high,
        result.skipped_days,
        args.out.display()
    );
    Ok(())
}

fn write_result_documents(out_dir: &Path, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    fs::write(out_dir.join("results.json"), result.to_json())?;

    let mut predictions = csv::Writer::from_path(out_dir.join("predictions.csv"))?;
    predictions.write_record([
        "run_id",
        "date",
        "community_id",
        "replica",
        "true_label",
        "predicted_label",
        "score",
    ])?;
    for row in &result.predictions {
        predictions.write_record([
            row.run_id.as_str(),
            &row.date.to_string(),
            row.community_id.as_str(),
            &row.replica.to_string(),
            row.true_label.as_flag(),
            row.predicted_label.as_flag(),
            &format!("{:?}", row.score),
        ])?;
    }
    predictions.flush()?;

    let scored: Vec<(f64, Label)> = result
        .predictions
        .iter()
        .map(|r| (r.score, r.true_label))
        .collect();
    let (roc, pr) = curves(&scored);
    let roc_file = fs::File::create(out_dir.join("roc.csv"))?;
    write_curve_csv(roc_file, roc.iter().map(|p| (p.threshold, p.fpr, p.tpr)))?;
    let pr_file = fs::File::create(out_dir.join("pr.csv"))?;
    write_curve_csv(pr_file, pr.iter().map(|p| (p.threshold, p.recall, p.precision)))?;

    write_error_histogram(&out_dir.join("error_histogram.csv"), &result.predictions)?;
    Ok(())
}

fn write_error_histogram(path: &Path, predictions: &[PredictionRow]) -> Result<()> {
    let all = error_histogram(predictions, None);
    let false_positives = error_histogram(predictions, Some(Label::NonSio));
    let mut out = String::from("date,errors,false_positives\n");
    for (date, errors) in &all {
        let fp = false_positives.get(date).copied().unwrap_or(0);
        out.push_str(&format!("{date},{errors},{fp}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// report

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let (streams, _) = read_corpus_dir(&args.corpus, ParseMode::Lenient)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut activity = String::from("community_id,date,");
    activity.push_str(&PatternKind::ALL.map(|p| p.as_str().to_string()).join(","));
    activity.push('\n');

    for (community_id, _, events) in &streams {
        let members = events.iter().map(|e| e.author_id.clone()).collect();
        let slices = partition_by_day(events.clone(), community_id);
        let mut networks = Vec::new();
        for slice in &slices {
            let built = build_all(slice, args.threshold, &members, args.coretweet_key);
            networks.extend(built.into_values());
        }
        let series = activity_series(&networks);
        let dates: Vec<NaiveDate> = series
            .values()
            .next()
            .map(|s| s.keys().copied().collect())
            .unwrap_or_default();
        for date in dates {
            let counts: Vec<String> = PatternKind::ALL
                .iter()
                .map(|p| series[p][&date].to_string())
                .collect();
            activity.push_str(&format!("{community_id},{date},{}\n", counts.join(",")));
        }
    }
    let activity_path = args.out.join("activity.csv");
    fs::write(&activity_path, activity)
        .with_context(|| format!("writing {}", activity_path.display()))?;
    let mut written = vec![activity_path.display().to_string()];

    if let Some(model_path) = &args.model {
        let text = fs::read_to_string(model_path)
            .with_context(|| format!("reading {}", model_path.display()))?;
        let model = ForestModel::from_json(&text)?;
        let names = feature_names();
        if model.feature_count != names.len() {
            bail!(
                "model has {} features, expected {}",
                model.feature_count,
                names.len()
            );
        }
        let mut importance_csv = String::from("feature,importance\n");
        for (name, value) in names.iter().zip(model.feature_importance()) {
            importance_csv.push_str(&format!("{name},{value:?}\n"));
        }
        let importance_path = args.out.join("importance.csv");
        fs::write(&importance_path, importance_csv)
            .with_context(|| format!("writing {}", importance_path.display()))?;
        written.push(importance_path.display().to_string());
    }

    println!("report: {}", written.join(", "));
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle-check

const ORACLE_THRESHOLDS: [i64; 4] = [1, 60, 300, 600];

fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<()> {
    let mut mismatches = 0u64;
    let mut total_items = 0u64;
    for case in 0..args.cases {
        let mut rng = derive_rng(args.seed, &[0x0c4e, case as u64]);
        let n_items = rng.random_range(0..=args.max_items);
        let n_keys = rng.random_range(1..=args.max_keys);
        let items: Vec<PatternItem> = (0..n_items)
            .map(|_| {
                PatternItem::new(
                    format!("k{}", rng.random_range(0..n_keys)),
                    format!("a{}", rng.random_range(0..60)),
                    rng.random_range(0..86_400),
                )
            })
            .collect();
        total_items += items.len() as u64;

        let mut previous = None;
        for threshold in ORACLE_THRESHOLDS {
            let swept = sweep_edges(&items, threshold);
            let oracle = oracle_edges(&items, threshold);
            if swept != oracle {
                mismatches += 1;
                eprintln!(
                    "case {case} threshold {threshold}: sweep {} edges, oracle {} edges",
                    swept.len(),
                    oracle.len()
                );
            }
            // Threshold monotonicity along the sorted threshold list.
            if let Some(smaller) = previous {
                if !swept.is_superset(&smaller) {
                    mismatches += 1;
                    eprintln!("case {case} threshold {threshold}: monotonicity violated");
                }
            }
            previous = Some(swept);
        }

        // Permutation invariance.
        let mut reversed = items.clone();
        reversed.reverse();
        if sweep_edges(&items, 60) != sweep_edges(&reversed, 60) {
            mismatches += 1;
            eprintln!("case {case}: permutation invariance violated");
        }
    }

    println!(
        "oracle check: {} cases, {total_items} items, thresholds {ORACLE_THRESHOLDS:?}, {mismatches} mismatches",
        args.cases
    );
    if mismatches > 0 {
        bail!("{mismatches} oracle mismatches");
    }
    Ok(())
}
