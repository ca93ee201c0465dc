//! Experiment orchestration for the two prediction tasks.
//!
//! Task 1 is sliding-window time series prediction on known campaigns: for
//! every test day the forest trains on the previous `N` days of all 20
//! sources and classifies the held-out day's 20 vectors. Task 2 holds out a
//! whole campaign and baseline: each day a biased coin picks which held-out
//! stream supplies the single test vector, probing cross-campaign transfer.
//!
//! Every training window ends strictly before the tested activity begins
//! (daily: train through t-1, test t; weekly: train windows end by t-1, the
//! tested week starts at t and is dated t+6).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{ForestModel, TrainError};
use crate::ingest::{partition_by_day, CommunitySlice, TweetEvent};
use crate::metrics::{
    prf, Confusion, MetricSummary, PredictionRow,
};
use crate::netbuild::{build_all, CoRetweetKey, CoordinationNetwork, PatternKind};
use crate::netstats::{
    compute_stats, concat_stats, weekly_union, Aggregation, FeatureVector, Label, NetworkStats,
    FEATURE_COUNT,
};
use crate::rng::{derive_rng, derive_seed, sample_indices};
use crate::synthgen::GeneratedCorpus;

pub const DEFAULT_WINDOW_N: usize = 60;
pub const DEFAULT_THRESHOLD_SECS: i64 = 60;
pub const DEFAULT_N_TREES: usize = 100;
pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];
/// Number of seeded draws when groups are sampled rather than enumerated.
pub const SAMPLED_GROUP_COUNT: usize = 100;

const CI_METHOD: &str = "normal approximation, mean +/- 1.96 * sample std / sqrt(n)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Task {
    One,
    Two,
}

impl From<Task> for u8 {
    fn from(task: Task) -> u8 {
        match task {
            Task::One => 1,
            Task::Two => 2,
        }
    }
}

impl TryFrom<u8> for Task {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Task::One),
            2 => Ok(Task::Two),
            other => Err(format!("task must be 1 or 2, got {other}")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value: u8 = s.parse().map_err(|_| format!("task must be 1 or 2, got {s}"))?;
        Task::try_from(value)
    }
}

/// Training class ratio of SIO to non-SIO source streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassRatio {
    TwoToEighteen,
    FiveToFifteen,
}

impl ClassRatio {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassRatio::TwoToEighteen => "2:18",
            ClassRatio::FiveToFifteen => "5:15",
        }
    }

    /// SIO campaigns trained on per group.
    pub fn sio_count(self) -> usize {
        match self {
            ClassRatio::TwoToEighteen => 2,
            ClassRatio::FiveToFifteen => 5,
        }
    }

    /// Non-SIO streams after oversampling.
    pub fn nonsio_count(self) -> usize {
        match self {
            ClassRatio::TwoToEighteen => 18,
            ClassRatio::FiveToFifteen => 15,
        }
    }

    /// Probability that a Task 2 test day draws from the held-out campaign.
    pub fn heads_probability(self) -> f64 {
        match self {
            ClassRatio::TwoToEighteen => 1.0 / 9.0,
            ClassRatio::FiveToFifteen => 1.0 / 3.0,
        }
    }
}

impl fmt::Display for ClassRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2:18" => Ok(ClassRatio::TwoToEighteen),
            "5:15" => Ok(ClassRatio::FiveToFifteen),
            other => Err(format!("ratio must be 2:18 or 5:15, got {other}")),
        }
    }
}

impl From<ClassRatio> for String {
    fn from(ratio: ClassRatio) -> String {
        ratio.as_str().to_string()
    }
}

impl TryFrom<String> for ClassRatio {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub task: Task,
    pub aggregation: Aggregation,
    pub ratio: ClassRatio,
    #[serde(default = "default_window_n")]
    pub window_n: usize,
    #[serde(default = "default_threshold_secs")]
    pub threshold_secs: i64,
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub date_range: (NaiveDate, NaiveDate),
    #[serde(default)]
    pub tuning_range: Option<(NaiveDate, NaiveDate)>,
    /// Record per-(group, day) train/test window bounds for leakage audits.
    #[serde(default)]
    pub audit: bool,
}

fn default_window_n() -> usize {
    DEFAULT_WINDOW_N
}

fn default_threshold_secs() -> i64 {
    DEFAULT_THRESHOLD_SECS
}

fn default_n_trees() -> usize {
    DEFAULT_N_TREES
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

impl ExperimentSpec {
    pub fn new(
        task: Task,
        aggregation: Aggregation,
        ratio: ClassRatio,
        date_range: (NaiveDate, NaiveDate),
    ) -> Self {
        Self {
            task,
            aggregation,
            ratio,
            window_n: DEFAULT_WINDOW_N,
            threshold_secs: DEFAULT_THRESHOLD_SECS,
            n_trees: DEFAULT_N_TREES,
            seeds: DEFAULT_SEEDS.to_vec(),
            date_range,
            tuning_range: None,
            audit: false,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.window_n == 0 {
            return Err(HarnessError::InvalidSpec("window_n must be at least 1".into()));
        }
        if self.n_trees == 0 {
            return Err(HarnessError::InvalidSpec("n_trees must be at least 1".into()));
        }
        if self.threshold_secs <= 0 {
            return Err(HarnessError::InvalidSpec("threshold must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::InvalidSpec("at least one seed is required".into()));
        }
        if self.date_range.1 < self.date_range.0 {
            return Err(HarnessError::InvalidSpec("date range ends before it starts".into()));
        }
        if let Some((start, end)) = self.tuning_range {
            if end < start {
                return Err(HarnessError::InvalidSpec(
                    "tuning range ends before it starts".into(),
                ));
            }
            let eval_start = self.date_range.0 + Days::new(self.window_n as u64);
            if end >= eval_start {
                return Err(HarnessError::InvalidSpec(format!(
                    "tuning range must end before the first evaluated day {eval_start}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("need at least {needed} campaigns, corpus has {available}")]
    TooFewCampaigns { needed: usize, available: usize },
    #[error("need at least {needed} baselines, corpus has {available}")]
    TooFewBaselines { needed: usize, available: usize },
    #[error("oversample target {target} is below the {available} available streams")]
    OversampleTarget { target: usize, available: usize },
    #[error("community {0} appears twice in the corpus")]
    DuplicateCommunity(String),
    #[error("community {community} has conflicting labels in the feature rows")]
    ConflictingLabels { community: String },
    #[error("feature rows for {community} have wrong dimension")]
    BadFeatureRows { community: String },
    #[error("no evaluable days: every (group, day) pair was skipped")]
    NoEvaluableDays,
    #[error("spec has no tuning range")]
    MissingTuningRange,
    #[error("no window candidates supplied")]
    NoCandidates,
    #[error("tuning range spans {span} days, too short for window {max_n}")]
    InsufficientTuningData { span: usize, max_n: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// One community's per-day feature values at both aggregations, over its
/// observed activity range. Days inside the range with no activity score
/// zero everywhere; days outside the range do not exist.
#[derive(Clone, Debug)]
pub struct CommunityStream {
    pub community_id: String,
    pub label: Label,
    pub first: NaiveDate,
    pub last: NaiveDate,
    daily: BTreeMap<NaiveDate, Vec<f64>>,
    weekly: BTreeMap<NaiveDate, Vec<f64>>,
    zero: Vec<f64>,
}

impl CommunityStream {
    /// Feature values for a date, or None when the date is outside the
    /// stream's range or the stream lacks this aggregation entirely.
    pub fn values(&self, date: NaiveDate, aggregation: Aggregation) -> Option<&Vec<f64>> {
        if date < self.first || date > self.last {
            return None;
        }
        let map = match aggregation {
            Aggregation::Daily => &self.daily,
            Aggregation::Weekly => &self.weekly,
        };
        if map.is_empty() {
            return None;
        }
        Some(map.get(&date).unwrap_or(&self.zero))
    }

    fn has(&self, aggregation: Aggregation) -> bool {
        match aggregation {
            Aggregation::Daily => !self.daily.is_empty(),
            Aggregation::Weekly => !self.weekly.is_empty(),
        }
    }

    /// All per-day vectors of one aggregation, as labeled feature rows.
    pub fn feature_vectors(&self, aggregation: Aggregation) -> Vec<FeatureVector> {
        let mut rows = Vec::new();
        let mut date = self.first;
        while date <= self.last {
            if let Some(values) = self.values(date, aggregation) {
                rows.push(FeatureVector {
                    community_id: self.community_id.clone(),
                    date,
                    aggregation,
                    label: self.label,
                    values: values.clone(),
                });
            }
            date = date.succ_opt().expect("date range in bounds");
        }
        rows
    }

    fn from_events(
        community_id: String,
        label: Label,
        events: Vec<TweetEvent>,
        threshold_secs: i64,
        coretweet_key: CoRetweetKey,
    ) -> Option<Self> {
        if events.is_empty() {
            return None;
        }
        let members = events.iter().map(|e| e.author_id.clone()).collect();
        let slices = partition_by_day(events, &community_id);
        let by_date: BTreeMap<NaiveDate, CommunitySlice> =
            slices.into_iter().map(|s| (s.date, s)).collect();
        let first = *by_date.keys().next().unwrap();
        let last = *by_date.keys().last().unwrap();

        let mut daily = BTreeMap::new();
        let mut weekly = BTreeMap::new();
        let mut window: VecDeque<BTreeMap<PatternKind, CoordinationNetwork>> = VecDeque::new();
        let mut date = first;
        while date <= last {
            let networks = match by_date.get(&date) {
                Some(slice) => build_all(slice, threshold_secs, &members, coretweet_key),
                None => PatternKind::ALL
                    .into_iter()
                    .map(|p| (p, CoordinationNetwork::empty(&community_id, date, p)))
                    .collect(),
            };
            let stats: BTreeMap<PatternKind, NetworkStats> = networks
                .iter()
                .map(|(p, n)| (*p, compute_stats(n)))
                .collect();
            daily.insert(date, concat_stats(&stats));

            window.push_back(networks);
            if window.len() > 7 {
                window.pop_front();
            }
            let weekly_stats: BTreeMap<PatternKind, NetworkStats> = PatternKind::ALL
                .into_iter()
                .map(|pattern| {
                    let days: Vec<CoordinationNetwork> =
                        window.iter().map(|nets| nets[&pattern].clone()).collect();
                    (pattern, compute_stats(&weekly_union(&days)))
                })
                .collect();
            weekly.insert(date, concat_stats(&weekly_stats));

            date = date.succ_opt().expect("date range in bounds");
        }

        Some(Self {
            community_id,
            label,
            first,
            last,
            daily,
            weekly,
            zero: vec![0.0; FEATURE_COUNT],
        })
    }
}

/// Labeled per-community feature streams; campaigns carry the SIO label,
/// baselines the non-SIO label.
#[derive(Clone, Debug, Default)]
pub struct CommunityCorpus {
    streams: BTreeMap<String, CommunityStream>,
}

impl CommunityCorpus {
    pub fn insert(&mut self, stream: CommunityStream) -> Result<(), HarnessError> {
        if self.streams.contains_key(&stream.community_id) {
            return Err(HarnessError::DuplicateCommunity(stream.community_id.clone()));
        }
        self.streams.insert(stream.community_id.clone(), stream);
        Ok(())
    }

    pub fn get(&self, community_id: &str) -> Option<&CommunityStream> {
        self.streams.get(community_id)
    }

    pub fn streams(&self) -> impl Iterator<Item = &CommunityStream> {
        self.streams.values()
    }

    pub fn campaign_ids(&self) -> Vec<String> {
        self.streams
            .values()
            .filter(|s| s.label == Label::Sio)
            .map(|s| s.community_id.clone())
            .collect()
    }

    pub fn baseline_ids(&self) -> Vec<String> {
        self.streams
            .values()
            .filter(|s| s.label == Label::NonSio)
            .map(|s| s.community_id.clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    /// Build feature streams from raw event streams.
    pub fn from_event_streams(
        inputs: Vec<(String, Label, Vec<TweetEvent>)>,
        threshold_secs: i64,
        coretweet_key: CoRetweetKey,
    ) -> Result<Self, HarnessError> {
        let streams: Vec<Option<CommunityStream>> = inputs
            .into_par_iter()
            .map(|(id, label, events)| {
                CommunityStream::from_events(id, label, events, threshold_secs, coretweet_key)
            })
            .collect();
        let mut corpus = CommunityCorpus::default();
        for stream in streams.into_iter().flatten() {
            corpus.insert(stream)?;
        }
        Ok(corpus)
    }

    /// Build directly from a generated synthetic corpus, at its manifest's
    /// threshold.
    pub fn from_generated(
        generated: &GeneratedCorpus,
        coretweet_key: CoRetweetKey,
    ) -> Result<Self, HarnessError> {
        let inputs = generated
            .communities
            .iter()
            .map(|c| (c.community_id.clone(), c.label, c.events.clone()))
            .collect();
        Self::from_event_streams(inputs, generated.manifest.threshold_secs, coretweet_key)
    }

    /// Assemble a corpus from previously exported feature rows.
    pub fn from_feature_rows(rows: Vec<FeatureVector>) -> Result<Self, HarnessError> {
        let mut grouped: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
        for row in rows {
            grouped.entry(row.community_id.clone()).or_default().push(row);
        }
        let mut corpus = CommunityCorpus::default();
        for (community_id, rows) in grouped {
            let label = rows[0].label;
            if rows.iter().any(|r| r.label != label) {
                return Err(HarnessError::ConflictingLabels { community: community_id });
            }
            if rows.iter().any(|r| r.values.len() != FEATURE_COUNT) {
                return Err(HarnessError::BadFeatureRows { community: community_id });
            }
            let first = rows.iter().map(|r| r.date).min().unwrap();
            let last = rows.iter().map(|r| r.date).max().unwrap();
            let mut daily = BTreeMap::new();
            let mut weekly = BTreeMap::new();
            for row in rows {
                let map = match row.aggregation {
                    Aggregation::Daily => &mut daily,
                    Aggregation::Weekly => &mut weekly,
                };
                map.insert(row.date, row.values);
            }
            corpus.insert(CommunityStream {
                community_id,
                label,
                first,
                last,
                daily,
                weekly,
                zero: vec![0.0; FEATURE_COUNT],
            })?;
        }
        Ok(corpus)
    }
}

/// Replicate baseline streams round-robin in input order until `target`
/// streams exist. Each replica is an exact copy tagged with a replica index.
pub fn oversample(ids: &[String], target: usize) -> Result<Vec<(String, usize)>, HarnessError> {
    if ids.is_empty() || target < ids.len() {
        return Err(HarnessError::OversampleTarget {
            target,
            available: ids.len(),
        });
    }
    let mut out = Vec::with_capacity(target);
    let mut replica = 0usize;
    while out.len() < target {
        for id in ids {
            if out.len() == target {
                break;
            }
            out.push((id.clone(), replica));
        }
        replica += 1;
    }
    Ok(out)
}

fn combinations(ids: &[String], k: usize) -> Vec<Vec<String>> {
    let n = ids.len();
    if k > n {
        return Vec::new();
    }
    let mut result = Vec::new();
    let mut indices: Vec<usize> = (0..k).collect();
    loop {
        result.push(indices.iter().map(|&i| ids[i].clone()).collect());
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return result;
            }
            i -= 1;
            if indices[i] != i + n - k {
                break;
            }
        }
        indices[i] += 1;
        for j in i + 1..k {
            indices[j] = indices[j - 1] + 1;
        }
    }
}

/// Task 1 training groups: all pairs for 2:18, one hundred seeded 5-subsets
/// for 5:15.
pub fn enumerate_task1_groups(
    campaign_ids: &[String],
    ratio: ClassRatio,
    seed: u64,
) -> Result<Vec<Vec<String>>, HarnessError> {
    let mut ids = campaign_ids.to_vec();
    ids.sort();
    let needed = ratio.sio_count();
    if ids.len() < needed {
        return Err(HarnessError::TooFewCampaigns {
            needed,
            available: ids.len(),
        });
    }
    match ratio {
        ClassRatio::TwoToEighteen => Ok(combinations(&ids, 2)),
        ClassRatio::FiveToFifteen => {
            let mut groups = Vec::with_capacity(SAMPLED_GROUP_COUNT);
            for draw in 0..SAMPLED_GROUP_COUNT as u64 {
                let mut rng = derive_rng(seed, &[0x5a15, draw]);
                let mut subset: Vec<String> = sample_indices(&mut rng, ids.len(), 5)
                    .into_iter()
                    .map(|i| ids[i].clone())
                    .collect();
                subset.sort();
                groups.push(subset);
            }
            Ok(groups)
        }
    }
}

/// One Task 2 evaluation group: trained sources plus the held-out pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task2Group {
    pub train_campaigns: Vec<String>,
    pub held_out_campaign: String,
    pub train_baselines: Vec<String>,
    pub held_out_baseline: String,
}

/// Task 2 groups. For 2:18: every campaign triplet, holding out the
/// lexicographically last member, with a seeded choice of held-out baseline.
/// For 5:15: one hundred seeded draws of five training campaigns, one
/// held-out campaign and one held-out baseline.
pub fn enumerate_task2_groups(
    campaign_ids: &[String],
    baseline_ids: &[String],
    ratio: ClassRatio,
    seed: u64,
) -> Result<Vec<Task2Group>, HarnessError> {
    let mut campaigns = campaign_ids.to_vec();
    campaigns.sort();
    let mut baselines = baseline_ids.to_vec();
    baselines.sort();
    let needed = ratio.sio_count() + 1;
    if campaigns.len() < needed {
        return Err(HarnessError::TooFewCampaigns {
            needed,
            available: campaigns.len(),
        });
    }
    if baselines.len() < 2 {
        return Err(HarnessError::TooFewBaselines {
            needed: 2,
            available: baselines.len(),
        });
    }

    let pick_baselines = |rng: &mut ChaCha8Rng| -> (Vec<String>, String) {
        let held_idx = rng.random_range(0..baselines.len());
        let held = baselines[held_idx].clone();
        let train = baselines
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held_idx)
            .map(|(_, id)| id.clone())
            .collect();
        (train, held)
    };

    match ratio {
        ClassRatio::TwoToEighteen => {
            let mut groups = Vec::new();
            for (g_idx, triplet) in combinations(&campaigns, 3).into_iter().enumerate() {
                let mut rng = derive_rng(seed, &[0xba5e, g_idx as u64]);
                let (train_baselines, held_out_baseline) = pick_baselines(&mut rng);
                let held_out_campaign = triplet.last().unwrap().clone();
                groups.push(Task2Group {
                    train_campaigns: triplet[..2].to_vec(),
                    held_out_campaign,
                    train_baselines,
                    held_out_baseline,
                });
            }
            Ok(groups)
        }
        ClassRatio::FiveToFifteen => {
            let mut groups = Vec::with_capacity(SAMPLED_GROUP_COUNT);
            for draw in 0..SAMPLED_GROUP_COUNT as u64 {
                let mut rng = derive_rng(seed, &[0x2515, draw]);
                let order = sample_indices(&mut rng, campaigns.len(), campaigns.len());
                let mut train_campaigns: Vec<String> =
                    order[..5].iter().map(|&i| campaigns[i].clone()).collect();
                train_campaigns.sort();
                let held_out_campaign =
                    campaigns[order[5 + rng.random_range(0..campaigns.len() - 5)]].clone();
                let (train_baselines, held_out_baseline) = pick_baselines(&mut rng);
                groups.push(Task2Group {
                    train_campaigns,
                    held_out_campaign,
                    train_baselines,
                    held_out_baseline,
                });
            }
            Ok(groups)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Train/test window bounds of one assembled (train, test) pair. The
/// no-leakage invariant is `max_train_day < test_window_start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub run_id: String,
    pub test_date: NaiveDate,
    pub max_train_day: NaiveDate,
    pub test_window_start: NaiveDate,
}

pub fn leakage_violations(audit: &[AuditRecord]) -> Vec<&AuditRecord> {
    audit
        .iter()
        .filter(|a| a.max_train_day >= a.test_window_start)
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub task: Task,
    pub aggregation: Aggregation,
    pub ratio: ClassRatio,
    pub window_n: usize,
    pub threshold_secs: i64,
    pub n_trees: usize,
    pub seeds: Vec<u64>,
    pub date_range: (NaiveDate, NaiveDate),
    pub ci_method: String,
    pub group_count: usize,
    pub skipped_days: u64,
    pub summary: MetricSummary,
    pub runs: Vec<RunMetrics>,
    pub predictions: Vec<PredictionRow>,
    pub audit: Vec<AuditRecord>,
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// A training source: a community stream plus its oversampling replica index.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SourceRef {
    community_id: String,
    replica: usize,
}

struct DayPlan {
    train_start: NaiveDate,
    train_end: NaiveDate,
    test_date: NaiveDate,
    test_window_start: NaiveDate,
    ordinal: u64,
}

fn eval_days(spec: &ExperimentSpec) -> Vec<DayPlan> {
    let mut plans = Vec::new();
    let start = spec.date_range.0 + Days::new(spec.window_n as u64);
    let end = match spec.aggregation {
        Aggregation::Daily => spec.date_range.1,
        Aggregation::Weekly => spec.date_range.1 - Days::new(6),
    };
    let mut t = start;
    while t <= end {
        let (test_date, test_window_start) = match spec.aggregation {
            Aggregation::Daily => (t, t),
            // The tested week covers [t, t+6] and is dated t+6.
            Aggregation::Weekly => (t + Days::new(6), t),
        };
        plans.push(DayPlan {
            train_start: t - Days::new(spec.window_n as u64),
            train_end: t - Days::new(1),
            test_date,
            test_window_start,
            ordinal: (t - spec.date_range.0).num_days() as u64,
        });
        t = t.succ_opt().expect("date range in bounds");
    }
    plans
}

fn covers_training(stream: &CommunityStream, plan: &DayPlan, aggregation: Aggregation) -> bool {
    stream.has(aggregation) && stream.first <= plan.train_start && stream.last >= plan.train_end
}

fn covers_test(stream: &CommunityStream, plan: &DayPlan, aggregation: Aggregation) -> bool {
    stream.has(aggregation) && stream.first <= plan.test_date && stream.last >= plan.test_date
}

fn training_rows(
    corpus: &CommunityCorpus,
    sources: &[SourceRef],
    plan: &DayPlan,
    aggregation: Aggregation,
) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut x = Vec::with_capacity(sources.len() * 8);
    let mut y = Vec::new();
    for source in sources {
        let stream = corpus.get(&source.community_id).expect("checked coverage");
        let mut d = plan.train_start;
        while d <= plan.train_end {
            if let Some(values) = stream.values(d, aggregation) {
                x.push(values.clone());
                y.push(stream.label);
            }
            d = d.succ_opt().expect("date range in bounds");
        }
    }
    (x, y)
}

struct GroupDayOutcome {
    predictions: Vec<PredictionRow>,
    confusion: Confusion,
    audit: Option<AuditRecord>,
}

/// Task 1: time series prediction on known campaigns. Per-day metrics are
/// averaged over days within each group; the summary CIs are taken across
/// groups.
pub fn run_task1(
    spec: &ExperimentSpec,
    corpus: &CommunityCorpus,
) -> Result<ExperimentResult, HarnessError> {
    spec.validate()?;
    let campaigns = corpus.campaign_ids();
    let baselines = corpus.baseline_ids();
    let group_seed = spec.seeds[0];
    let groups = enumerate_task1_groups(&campaigns, spec.ratio, group_seed)?;
    let replicas = oversample(&baselines, spec.ratio.nonsio_count())?;
    let plans = eval_days(spec);

    let mut runs = Vec::new();
    let mut predictions = Vec::new();
    let mut audit = Vec::new();
    let mut skipped_days = 0u64;
    let mut f1s = Vec::new();
    let mut ps = Vec::new();
    let mut rs = Vec::new();

    for (g_idx, group) in groups.iter().enumerate() {
        let run_id = format!("g{g_idx}");
        let mut sources: Vec<SourceRef> = group
            .iter()
            .map(|id| SourceRef {
                community_id: id.clone(),
                replica: 0,
            })
            .collect();
        sources.extend(replicas.iter().map(|(id, replica)| SourceRef {
            community_id: id.clone(),
            replica: *replica,
        }));

        let outcomes: Vec<Option<(GroupDayOutcome, (f64, f64, f64))>> = plans
            .par_iter()
            .map(|plan| {
                let ok = sources.iter().all(|s| {
                    corpus.get(&s.community_id).is_some_and(|stream| {
                        covers_training(stream, plan, spec.aggregation)
                            && covers_test(stream, plan, spec.aggregation)
                    })
                });
                if !ok {
                    return None;
                }
                let (x, y) = training_rows(corpus, &sources, plan, spec.aggregation);
                if x.is_empty() {
                    return None;
                }
                let forest_seed =
                    derive_seed(group_seed, &[0x7a51, g_idx as u64, plan.ordinal]);
                let model = ForestModel::train(&x, &y, spec.n_trees, forest_seed)
                    .expect("non-empty training rows");
                let mut confusion = Confusion::default();
                let mut rows = Vec::with_capacity(sources.len());
                for source in &sources {
                    let stream = corpus.get(&source.community_id).unwrap();
                    let values = stream
                        .values(plan.test_date, spec.aggregation)
                        .expect("checked coverage");
                    let (predicted, score) = model.predict(values);
                    confusion.record(stream.label, predicted);
                    rows.push(PredictionRow {
                        run_id: run_id.clone(),
                        date: plan.test_date,
                        community_id: source.community_id.clone(),
                        replica: source.replica,
                        true_label: stream.label,
                        predicted_label: predicted,
                        score,
                    });
                }
                let day_metrics = prf(&confusion);
                let audit_record = spec.audit.then(|| AuditRecord {
                    run_id: run_id.clone(),
                    test_date: plan.test_date,
                    max_train_day: plan.train_end,
                    test_window_start: plan.test_window_start,
                });
                Some((
                    GroupDayOutcome {
                        predictions: rows,
                        confusion,
                        audit: audit_record,
                    },
                    day_metrics,
                ))
            })
            .collect();

        let mut day_ps = Vec::new();
        let mut day_rs = Vec::new();
        let mut day_f1s = Vec::new();
        for outcome in outcomes {
            match outcome {
                None => skipped_days += 1,
                Some((day, (p, r, f1))) => {
                    predictions.extend(day.predictions);
                    if let Some(record) = day.audit {
                        audit.push(record);
                    }
                    day_ps.push(p);
                    day_rs.push(r);
                    day_f1s.push(f1);
                }
            }
        }
        if day_f1s.is_empty() {
            continue;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (p, r, f1) = (mean(&day_ps), mean(&day_rs), mean(&day_f1s));
        runs.push(RunMetrics {
            run_id,
            f1,
            precision: p,
            recall: r,
        });
        f1s.push(f1);
        ps.push(p);
        rs.push(r);
    }

    if runs.is_empty() {
        return Err(HarnessError::NoEvaluableDays);
    }
    Ok(ExperimentResult {
        task: spec.task,
        aggregation: spec.aggregation,
        ratio: spec.ratio,
        window_n: spec.window_n,
        threshold_secs: spec.threshold_secs,
        n_trees: spec.n_trees,
        seeds: spec.seeds.clone(),
        date_range: spec.date_range,
        ci_method: CI_METHOD.to_string(),
        group_count: groups.len(),
        skipped_days,
        summary: MetricSummary::from_runs(&f1s, &ps, &rs),
        runs,
        predictions,
        audit,
    })
}

pub(crate) fn flip_heads(rng: &mut ChaCha8Rng, probability: f64) -> bool {
    rng.random::<f64>() < probability
}

/// Task 2: cross-campaign generalization. Each seed is one run: per day the
/// biased coin picks the held-out campaign (heads) or baseline (tails), the
/// per-day predictions pool into one run-level confusion, and CIs are taken
/// across seeds.
pub fn run_task2(
    spec: &ExperimentSpec,
    corpus: &CommunityCorpus,
) -> Result<ExperimentResult, HarnessError> {
    spec.validate()?;
    let campaigns = corpus.campaign_ids();
    let baselines = corpus.baseline_ids();
    let plans = eval_days(spec);

    let mut runs = Vec::new();
    let mut predictions = Vec::new();
    let mut audit = Vec::new();
    let mut skipped_days = 0u64;
    let mut f1s = Vec::new();
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    let mut group_count = 0usize;

    for &seed in &spec.seeds {
        let groups = enumerate_task2_groups(&campaigns, &baselines, spec.ratio, seed)?;
        group_count = groups.len();
        let seed_run_id = format!("s{seed}");
        let mut run_confusion = Confusion::default();

        for (g_idx, group) in groups.iter().enumerate() {
            let run_id = format!("s{seed}-g{g_idx}");
            let mut sources: Vec<SourceRef> = group
                .train_campaigns
                .iter()
                .map(|id| SourceRef {
                    community_id: id.clone(),
                    replica: 0,
                })
                .collect();
            let replicas = oversample(&group.train_baselines, spec.ratio.nonsio_count())?;
            sources.extend(replicas.into_iter().map(|(id, replica)| SourceRef {
                community_id: id,
                replica,
            }));

            let outcomes: Vec<Option<GroupDayOutcome>> = plans
                .par_iter()
                .map(|plan| {
                    let trains_ok = sources.iter().all(|s| {
                        corpus
                            .get(&s.community_id)
                            .is_some_and(|stream| covers_training(stream, plan, spec.aggregation))
                    });
                    if !trains_ok {
                        return None;
                    }
                    let mut coin =
                        derive_rng(seed, &[0xc011, g_idx as u64, plan.ordinal]);
                    let heads = flip_heads(&mut coin, spec.ratio.heads_probability());
                    let test_id = if heads {
                        &group.held_out_campaign
                    } else {
                        &group.held_out_baseline
                    };
                    let test_stream = corpus.get(test_id)?;
                    if !covers_test(test_stream, plan, spec.aggregation) {
                        return None;
                    }
                    let (x, y) = training_rows(corpus, &sources, plan, spec.aggregation);
                    if x.is_empty() {
                        return None;
                    }
                    let forest_seed = derive_seed(seed, &[0x7a52, g_idx as u64, plan.ordinal]);
                    let model = ForestModel::train(&x, &y, spec.n_trees, forest_seed)
                        .expect("non-empty training rows");
                    let values = test_stream
                        .values(plan.test_date, spec.aggregation)
                        .expect("checked coverage");
                    let (predicted, score) = model.predict(values);
                    let mut confusion = Confusion::default();
                    confusion.record(test_stream.label, predicted);
                    let audit_record = spec.audit.then(|| AuditRecord {
                        run_id: run_id.clone(),
                        test_date: plan.test_date,
                        max_train_day: plan.train_end,
                        test_window_start: plan.test_window_start,
                    });
                    Some(GroupDayOutcome {
                        predictions: vec![PredictionRow {
                            run_id: run_id.clone(),
                            date: plan.test_date,
                            community_id: test_id.clone(),
                            replica: 0,
                            true_label: test_stream.label,
                            predicted_label: predicted,
                            score,
                        }],
                        confusion,
                        audit: audit_record,
                    })
                })
                .collect();

            for outcome in outcomes {
                match outcome {
                    None => skipped_days += 1,
                    Some(day) => {
                        run_confusion.merge(&day.confusion);
                        predictions.extend(day.predictions);
                        if let Some(record) = day.audit {
                            audit.push(record);
                        }
                    }
                }
            }
        }

        if run_confusion.total() == 0 {
            continue;
        }
        let (p, r, f1) = prf(&run_confusion);
        runs.push(RunMetrics {
            run_id: seed_run_id,
            f1,
            precision: p,
            recall: r,
        });
        f1s.push(f1);
        ps.push(p);
        rs.push(r);
    }

    if runs.is_empty() {
        return Err(HarnessError::NoEvaluableDays);
    }
    Ok(ExperimentResult {
        task: spec.task,
        aggregation: spec.aggregation,
        ratio: spec.ratio,
        window_n: spec.window_n,
        threshold_secs: spec.threshold_secs,
        n_trees: spec.n_trees,
        seeds: spec.seeds.clone(),
        date_range: spec.date_range,
        ci_method: CI_METHOD.to_string(),
        group_count,
        skipped_days,
        summary: MetricSummary::from_runs(&f1s, &ps, &rs),
        runs,
        predictions,
        audit,
    })
}

/// Run the requested task.
pub fn run(spec: &ExperimentSpec, corpus: &CommunityCorpus) -> Result<ExperimentResult, HarnessError> {
    match spec.task {
        Task::One => run_task1(spec, corpus),
        Task::Two => run_task2(spec, corpus),
    }
}

/// Pick the window size with the best Task 1 mean F1 over the tuning range;
/// ties go to the largest candidate.
pub fn tune_window(
    spec: &ExperimentSpec,
    corpus: &CommunityCorpus,
    candidates: &[usize],
) -> Result<usize, HarnessError> {
    let tuning = spec.tuning_range.ok_or(HarnessError::MissingTuningRange)?;
    if candidates.is_empty() {
        return Err(HarnessError::NoCandidates);
    }
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let max_n = *sorted.last().unwrap();
    let span = (tuning.1 - tuning.0).num_days() as usize + 1;
    if span <= max_n {
        return Err(HarnessError::InsufficientTuningData { span, max_n });
    }

    let mut best: Option<(f64, usize)> = None;
    for &n in &sorted {
        let mut trial = spec.clone();
        trial.task = Task::One;
        trial.window_n = n;
        trial.date_range = tuning;
        trial.tuning_range = None;
        trial.audit = false;
        let result = run_task1(&trial, corpus)?;
        let f1 = result.summary.f1.mean;
        best = Some(match best {
            None => (f1, n),
            Some((best_f1, best_n)) => {
                if f1 > best_f1 + 1e-12 || (f1 >= best_f1 - 1e-12 && n > best_n) {
                    (f1, n)
                } else {
                    (best_f1, best_n)
                }
            }
        });
    }
    Ok(best.unwrap().1)
}
