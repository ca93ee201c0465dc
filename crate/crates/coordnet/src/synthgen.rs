//! Labeled synthetic tweet-event corpora with scripted coordination tactics.
//!
//! Every scripted behavior records the accounts it coordinated in a ground
//! truth manifest, so the networks built downstream are checkable. Background
//! noise uses a unique text/hashtag/url per tweet and therefore never creates
//! a timed-pattern edge.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{partition_by_day, TweetEvent};
use crate::netbuild::{build_all, edge, CoRetweetKey, Edge, PatternKind};
use crate::netstats::Label;
use crate::rng::{derive_rng, sample_indices};

/// One scripted community behavior.
///
/// `cadence_days = 1` fires daily, `k` fires every k-th day of the community's
/// range. Burst participants are drawn fresh each active day; all members of a
/// burst act within `intra_burst_spread_secs` of each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviorSpec {
    /// Participants post an identical text within the spread.
    CotweetBurst {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        cadence_days: u32,
    },
    /// The first participant posts; the rest retweet that tweet.
    RetweetRing {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        cadence_days: u32,
    },
    /// Participants post the same hashtag within the spread.
    HashtagPush {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        cadence_days: u32,
    },
    /// Participants share the same url within the spread.
    UrlPush {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        cadence_days: u32,
    },
    /// Participants mention the same user within the spread.
    MentionPush {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        cadence_days: u32,
    },
    /// Poisson-timed tweets with per-tweet unique text, hashtag and url.
    BackgroundNoise { tweets_per_day: f64 },
    /// A one-day mass same-hashtag posting, `day_offset` days into the range.
    EventSpike {
        participant_count: usize,
        intra_burst_spread_secs: i64,
        day_offset: u32,
    },
}

impl BehaviorSpec {
    fn participant_count(&self) -> Option<usize> {
        match self {
            BehaviorSpec::CotweetBurst { participant_count, .. }
            | BehaviorSpec::RetweetRing { participant_count, .. }
            | BehaviorSpec::HashtagPush { participant_count, .. }
            | BehaviorSpec::UrlPush { participant_count, .. }
            | BehaviorSpec::MentionPush { participant_count, .. }
            | BehaviorSpec::EventSpike { participant_count, .. } => Some(*participant_count),
            BehaviorSpec::BackgroundNoise { .. } => None,
        }
    }

    fn spread(&self) -> Option<i64> {
        match self {
            BehaviorSpec::CotweetBurst { intra_burst_spread_secs, .. }
            | BehaviorSpec::RetweetRing { intra_burst_spread_secs, .. }
            | BehaviorSpec::HashtagPush { intra_burst_spread_secs, .. }
            | BehaviorSpec::UrlPush { intra_burst_spread_secs, .. }
            | BehaviorSpec::MentionPush { intra_burst_spread_secs, .. }
            | BehaviorSpec::EventSpike { intra_burst_spread_secs, .. } => {
                Some(*intra_burst_spread_secs)
            }
            BehaviorSpec::BackgroundNoise { .. } => None,
        }
    }

    fn active_on(&self, day_idx: u32) -> bool {
        match self {
            BehaviorSpec::BackgroundNoise { .. } => true,
            BehaviorSpec::EventSpike { day_offset, .. } => day_idx == *day_offset,
            BehaviorSpec::CotweetBurst { cadence_days, .. }
            | BehaviorSpec::RetweetRing { cadence_days, .. }
            | BehaviorSpec::HashtagPush { cadence_days, .. }
            | BehaviorSpec::UrlPush { cadence_days, .. }
            | BehaviorSpec::MentionPush { cadence_days, .. } => day_idx % cadence_days == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityConfig {
    pub community_id: String,
    pub label: Label,
    pub n_accounts: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub behaviors: Vec<BehaviorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    /// The coordination threshold the manifest is sound at.
    pub threshold_secs: i64,
    pub communities: Vec<CommunityConfig>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("duplicate community id {0}")]
    DuplicateCommunityId(String),
    #[error("community {0} must have at least one account")]
    NoAccounts(String),
    #[error("community {community}: behavior needs {needed} participants but only {available} accounts exist")]
    TooFewAccounts {
        community: String,
        needed: usize,
        available: usize,
    },
    #[error("community {community}: intra-burst spread {spread}s exceeds the scenario threshold {threshold}s")]
    SpreadExceedsThreshold {
        community: String,
        spread: i64,
        threshold: i64,
    },
    #[error("community {community}: intra-burst spread must be non-negative")]
    NegativeSpread { community: String },
    #[error("community {community}: cadence_days must be at least 1")]
    ZeroCadence { community: String },
    #[error("community {community}: tweets_per_day must be positive")]
    NonPositiveNoiseRate { community: String },
    #[error("community {community}: date range ends before it starts")]
    BadDateRange { community: String },
    #[error("community {community}: event day offset {offset} is outside the {days}-day range")]
    EventOffsetOutOfRange {
        community: String,
        offset: u32,
        days: u32,
    },
    #[error("community {community}: two {pattern} behaviors are both scheduled on {date}")]
    PatternCollision {
        community: String,
        date: NaiveDate,
        pattern: PatternKind,
    },
    #[error("threshold_secs must be positive")]
    NonPositiveThreshold,
}

/// Ground truth: per (community, date, pattern), the accounts that the
/// generator scripted to coordinate. For the retweet pattern the first listed
/// account is the retweeted author.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub threshold_secs: i64,
    pub expected: BTreeMap<String, BTreeMap<NaiveDate, BTreeMap<PatternKind, Vec<String>>>>,
}

pub struct ManifestEntry<'a> {
    pub community_id: &'a str,
    pub date: NaiveDate,
    pub pattern: PatternKind,
    pub participants: &'a [String],
}

impl Manifest {
    fn record(
        &mut self,
        community: &str,
        date: NaiveDate,
        pattern: PatternKind,
        participants: Vec<String>,
    ) -> Result<(), ConfigError> {
        let slot = self
            .expected
            .entry(community.to_string())
            .or_default()
            .entry(date)
            .or_default();
        if slot.contains_key(&pattern) {
            return Err(ConfigError::PatternCollision {
                community: community.to_string(),
                date,
                pattern,
            });
        }
        slot.insert(pattern, participants);
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = ManifestEntry<'_>> {
        self.expected.iter().flat_map(|(community_id, by_date)| {
            by_date.iter().flat_map(move |(date, by_pattern)| {
                by_pattern.iter().map(move |(pattern, participants)| ManifestEntry {
                    community_id,
                    date: *date,
                    pattern: *pattern,
                    participants,
                })
            })
        })
    }

    /// The edges a scripted burst guarantees: all pairs for the five timed
    /// patterns, a star around the retweeted author for the retweet pattern.
    pub fn expected_edges(pattern: PatternKind, participants: &[String]) -> std::collections::BTreeSet<Edge> {
        let mut edges = std::collections::BTreeSet::new();
        match pattern {
            PatternKind::Retweet => {
                if let Some((hub, rest)) = participants.split_first() {
                    for account in rest {
                        edges.insert(edge(hub, account));
                    }
                }
            }
            _ => {
                for (i, a) in participants.iter().enumerate() {
                    for b in participants.iter().skip(i + 1) {
                        edges.insert(edge(a, b));
                    }
                }
            }
        }
        edges
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedCommunity {
    pub community_id: String,
    pub label: Label,
    pub n_accounts: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(skip)]
    pub events: Vec<TweetEvent>,
}

#[derive(Clone, Debug, Default)]
pub struct GeneratedCorpus {
    pub communities: Vec<GeneratedCommunity>,
    pub manifest: Manifest,
}

impl GeneratedCorpus {
    pub fn community(&self, id: &str) -> Option<&GeneratedCommunity> {
        self.communities.iter().find(|c| c.community_id == id)
    }
}

fn validate(config: &ScenarioConfig) -> Result<(), ConfigError> {
    if config.threshold_secs <= 0 {
        return Err(ConfigError::NonPositiveThreshold);
    }
    let mut seen = std::collections::BTreeSet::new();
    for community in &config.communities {
        let id = &community.community_id;
        if !seen.insert(id.clone()) {
            return Err(ConfigError::DuplicateCommunityId(id.clone()));
        }
        if community.n_accounts == 0 {
            return Err(ConfigError::NoAccounts(id.clone()));
        }
        if community.end < community.start {
            return Err(ConfigError::BadDateRange { community: id.clone() });
        }
        let days = days_inclusive(community.start, community.end);
        for behavior in &community.behaviors {
            if let Some(count) = behavior.participant_count() {
                let needed = match behavior {
                    // A ring needs the retweeted author plus one retweeter.
                    BehaviorSpec::RetweetRing { .. } => count.max(2),
                    _ => count.max(2),
                };
                if needed > community.n_accounts {
                    return Err(ConfigError::TooFewAccounts {
                        community: id.clone(),
                        needed,
                        available: community.n_accounts,
                    });
                }
            }
            if let Some(spread) = behavior.spread() {
                if spread < 0 {
                    return Err(ConfigError::NegativeSpread { community: id.clone() });
                }
                if spread > config.threshold_secs {
                    return Err(ConfigError::SpreadExceedsThreshold {
                        community: id.clone(),
                        spread,
                        threshold: config.threshold_secs,
                    });
                }
            }
            match behavior {
                BehaviorSpec::BackgroundNoise { tweets_per_day } => {
                    if *tweets_per_day <= 0.0 {
                        return Err(ConfigError::NonPositiveNoiseRate { community: id.clone() });
                    }
                }
                BehaviorSpec::EventSpike { day_offset, .. } => {
                    if *day_offset >= days {
                        return Err(ConfigError::EventOffsetOutOfRange {
                            community: id.clone(),
                            offset: *day_offset,
                            days,
                        });
                    }
                }
                BehaviorSpec::CotweetBurst { cadence_days, .. }
                | BehaviorSpec::RetweetRing { cadence_days, .. }
                | BehaviorSpec::HashtagPush { cadence_days, .. }
                | BehaviorSpec::UrlPush { cadence_days, .. }
                | BehaviorSpec::MentionPush { cadence_days, .. } => {
                    if *cadence_days == 0 {
                        return Err(ConfigError::ZeroCadence { community: id.clone() });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Generate event streams and the ground-truth manifest. Deterministic given
/// the config (community and day streams derive from the scenario seed, so
/// generation order does not matter).
pub fn generate(config: &ScenarioConfig) -> Result<GeneratedCorpus, ConfigError> {
    validate(config)?;
    let mut corpus = GeneratedCorpus {
        manifest: Manifest {
            threshold_secs: config.threshold_secs,
            ..Manifest::default()
        },
        ..GeneratedCorpus::default()
    };

    for (ci, community) in config.communities.iter().enumerate() {
        let accounts: Vec<String> = (0..community.n_accounts)
            .map(|k| format!("{}-u{k:03}", community.community_id))
            .collect();
        let mut events = Vec::new();
        let mut date = community.start;
        let mut day_idx = 0u32;
        while date <= community.end {
            let midnight = date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
            for (bi, behavior) in community.behaviors.iter().enumerate() {
                if !behavior.active_on(day_idx) {
                    continue;
                }
                let mut rng =
                    derive_rng(config.seed, &[ci as u64, day_idx as u64, bi as u64]);
                emit_behavior(
                    behavior,
                    community,
                    &accounts,
                    date,
                    day_idx,
                    bi,
                    midnight,
                    &mut rng,
                    &mut events,
                    &mut corpus.manifest,
                )?;
            }
            date = date.succ_opt().expect("date range in bounds");
            day_idx += 1;
        }
        events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
        corpus.communities.push(GeneratedCommunity {
            community_id: community.community_id.clone(),
            label: community.label,
            n_accounts: community.n_accounts,
            start: community.start,
            end: community.end,
            events,
        });
    }
    Ok(corpus)
}

fn blank_event(community: &str, day_idx: u32, bi: usize, seq: usize, author: &str, time: i64) -> TweetEvent {
    TweetEvent {
        tweet_id: format!("{community}-d{day_idx:03}-b{bi}-{seq:04}"),
        author_id: author.to_string(),
        timestamp: time,
        text: String::new(),
        hashtags: vec![],
        mentions: vec![],
        urls: vec![],
        is_retweet: false,
        retweeted_tweet_id: None,
        retweeted_author_id: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_behavior(
    behavior: &BehaviorSpec,
    community: &CommunityConfig,
    accounts: &[String],
    date: NaiveDate,
    day_idx: u32,
    bi: usize,
    midnight: i64,
    rng: &mut ChaCha8Rng,
    events: &mut Vec<TweetEvent>,
    manifest: &mut Manifest,
) -> Result<(), ConfigError> {
    let cid = &community.community_id;
    // Each behavior gets its own window in the middle of the day so bursts
    // never straddle midnight.
    let base = midnight + 12 * 3600 + (bi as i64) * 600;

    let pick = |rng: &mut ChaCha8Rng, count: usize| -> Vec<String> {
        sample_indices(rng, accounts.len(), count)
            .into_iter()
            .map(|i| accounts[i].clone())
            .collect()
    };

    match behavior {
        BehaviorSpec::BackgroundNoise { tweets_per_day } => {
            let rate_per_sec = tweets_per_day / 86_400.0;
            let gaps = Exp::new(rate_per_sec).expect("validated rate");
            let mut offset = gaps.sample(rng);
            let mut seq = 0usize;
            while offset < 86_400.0 {
                let author = &accounts[rng.random_range(0..accounts.len())];
                let mut event =
                    blank_event(cid, day_idx, bi, seq, author, midnight + offset as i64);
                event.text = format!("noise {cid} d{day_idx} n{seq}");
                event.hashtags = vec![format!("n{day_idx}x{seq}{}", cid.to_lowercase())];
                event.urls = vec![format!("https://noise.example/{cid}/{day_idx}/{seq}")];
                events.push(event);
                seq += 1;
                offset += gaps.sample(rng);
            }
        }
        BehaviorSpec::CotweetBurst {
            participant_count,
            intra_burst_spread_secs,
            ..
        } => {
            let mut participants = pick(rng, *participant_count);
            participants.sort();
            let text = format!("push {cid} d{day_idx} b{bi}");
            for (seq, author) in participants.iter().enumerate() {
                let jitter = rng.random_range(0..=*intra_burst_spread_secs);
                let mut event = blank_event(cid, day_idx, bi, seq, author, base + jitter);
                event.text = text.clone();
                events.push(event);
            }
            manifest.record(cid, date, PatternKind::CoTweet, participants)?;
        }
        BehaviorSpec::RetweetRing {
            participant_count,
            intra_burst_spread_secs,
            ..
        } => {
            let chosen = pick(rng, *participant_count);
            let (hub, retweeters) = chosen.split_first().expect("validated count");
            let mut hub_event = blank_event(cid, day_idx, bi, 0, hub, base);
            hub_event.text = format!("original {cid} d{day_idx} b{bi}");
            let hub_tweet_id = hub_event.tweet_id.clone();
            events.push(hub_event);
            let mut sorted_retweeters = retweeters.to_vec();
            sorted_retweeters.sort();
            for (seq, author) in sorted_retweeters.iter().enumerate() {
                let jitter = rng.random_range(0..=*intra_burst_spread_secs);
                let mut event =
                    blank_event(cid, day_idx, bi, seq + 1, author, base + 1 + jitter);
                event.text = format!("RT original {cid} d{day_idx} b{bi}");
                event.is_retweet = true;
                event.retweeted_tweet_id = Some(hub_tweet_id.clone());
                event.retweeted_author_id = Some(hub.clone());
                events.push(event);
            }
            let mut listed = vec![hub.clone()];
            listed.extend(sorted_retweeters.iter().cloned());
            manifest.record(cid, date, PatternKind::Retweet, listed)?;
            if sorted_retweeters.len() >= 2 {
                manifest.record(cid, date, PatternKind::CoRetweet, sorted_retweeters)?;
            }
        }
        BehaviorSpec::HashtagPush {
            participant_count,
            intra_burst_spread_secs,
            ..
        }
        | BehaviorSpec::EventSpike {
            participant_count,
            intra_burst_spread_secs,
            ..
        } => {
            let mut participants = pick(rng, *participant_count);
            participants.sort();
            let tag = match behavior {
                BehaviorSpec::EventSpike { .. } => {
                    format!("event{}d{day_idx}", cid.to_lowercase())
                }
                _ => format!("tag{}d{day_idx}b{bi}", cid.to_lowercase()),
            };
            for (seq, author) in participants.iter().enumerate() {
                let jitter = rng.random_range(0..=*intra_burst_spread_secs);
                let mut event = blank_event(cid, day_idx, bi, seq, author, base + jitter);
                event.text = format!("rally {tag} {cid} d{day_idx} s{seq}");
                event.hashtags = vec![tag.clone()];
                events.push(event);
            }
            manifest.record(cid, date, PatternKind::CoHashtag, participants)?;
        }
        BehaviorSpec::UrlPush {
            participant_count,
            intra_burst_spread_secs,
            ..
        } => {
            let mut participants = pick(rng, *participant_count);
            participants.sort();
            let url = format!("https://camp.example/{cid}/{day_idx}/{bi}");
            for (seq, author) in participants.iter().enumerate() {
                let jitter = rng.random_range(0..=*intra_burst_spread_secs);
                let mut event = blank_event(cid, day_idx, bi, seq, author, base + jitter);
                event.text = format!("share {cid} d{day_idx} s{seq}");
                event.urls = vec![url.clone()];
                events.push(event);
            }
            manifest.record(cid, date, PatternKind::CoUrl, participants)?;
        }
        BehaviorSpec::MentionPush {
            participant_count,
            intra_burst_spread_secs,
            ..
        } => {
            let mut participants = pick(rng, *participant_count);
            participants.sort();
            let target = format!("target_{}_d{day_idx}_b{bi}", cid.to_lowercase());
            for (seq, author) in participants.iter().enumerate() {
                let jitter = rng.random_range(0..=*intra_burst_spread_secs);
                let mut event = blank_event(cid, day_idx, bi, seq, author, base + jitter);
                event.text = format!("hey {cid} d{day_idx} s{seq}");
                event.mentions = vec![target.clone()];
                events.push(event);
            }
            manifest.record(cid, date, PatternKind::CoMention, participants)?;
        }
    }
    Ok(())
}

/// Check that every manifest entry's expected edges are present in the
/// networks built from the generated events at the scenario threshold.
/// Returns a description of each violation; an empty list means the manifest
/// is sound.
pub fn verify_manifest(corpus: &GeneratedCorpus, coretweet_key: CoRetweetKey) -> Vec<String> {
    let mut violations = Vec::new();
    for community in &corpus.communities {
        let members: std::collections::BTreeSet<String> = community
            .events
            .iter()
            .map(|e| e.author_id.clone())
            .collect();
        let slices = partition_by_day(community.events.clone(), &community.community_id);
        let by_date: BTreeMap<NaiveDate, _> =
            slices.into_iter().map(|s| (s.date, s)).collect();
        let Some(expected_days) = corpus.manifest.expected.get(&community.community_id) else {
            continue;
        };
        for (date, by_pattern) in expected_days {
            let Some(slice) = by_date.get(date) else {
                violations.push(format!(
                    "{} {date}: manifest expects activity but no events exist",
                    community.community_id
                ));
                continue;
            };
            let networks = build_all(slice, corpus.manifest.threshold_secs, &members, coretweet_key);
            for (pattern, participants) in by_pattern {
                let network = &networks[pattern];
                for pair in Manifest::expected_edges(*pattern, participants) {
                    if !network.edges.contains(&pair) {
                        violations.push(format!(
                            "{} {date} {pattern}: expected edge {} -- {} missing",
                            community.community_id, pair.0, pair.1
                        ));
                    }
                }
            }
        }
    }
    violations
}

fn days_inclusive(start: NaiveDate, end: NaiveDate) -> u32 {
    (end - start).num_days() as u32 + 1
}

fn range_200() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2019, 7, 19).unwrap(),
    )
}

fn range_120() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2019, 4, 30).unwrap(),
    )
}

fn range_110() -> (NaiveDate, NaiveDate) {
    (
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2019, 4, 20).unwrap(),
    )
}

fn community(
    id: &str,
    label: Label,
    n_accounts: usize,
    range: (NaiveDate, NaiveDate),
    behaviors: Vec<BehaviorSpec>,
) -> CommunityConfig {
    CommunityConfig {
        community_id: id.to_string(),
        label,
        n_accounts,
        start: range.0,
        end: range.1,
        behaviors,
    }
}

fn noise(tweets_per_day: f64) -> BehaviorSpec {
    BehaviorSpec::BackgroundNoise { tweets_per_day }
}

fn cotweet(participants: usize, spread: i64, cadence: u32) -> BehaviorSpec {
    BehaviorSpec::CotweetBurst {
        participant_count: participants,
        intra_burst_spread_secs: spread,
        cadence_days: cadence,
    }
}

fn hashtag(participants: usize, spread: i64, cadence: u32) -> BehaviorSpec {
    BehaviorSpec::HashtagPush {
        participant_count: participants,
        intra_burst_spread_secs: spread,
        cadence_days: cadence,
    }
}

fn ring(participants: usize, spread: i64, cadence: u32) -> BehaviorSpec {
    BehaviorSpec::RetweetRing {
        participant_count: participants,
        intra_burst_spread_secs: spread,
        cadence_days: cadence,
    }
}

/// The fixed scenario library used by the acceptance suite.
///
/// - `A` separable: daily co-tweet bursts against noise-only baselines.
/// - `B` shared-tactic transfer: the held-out campaign co-tweets like the
///   training campaigns.
/// - `C` disjoint-tactic transfer: the held-out campaign only pushes
///   hashtags while training campaigns only co-tweet.
/// - `D` null: identically configured communities with randomly assigned
///   labels.
/// - `E` event false positive: a legitimate community mass-posts one hashtag
///   on a single day, mimicking the campaigns' tactic.
pub fn scenario_library() -> BTreeMap<String, ScenarioConfig> {
    let mut library = BTreeMap::new();

    library.insert(
        "A".to_string(),
        ScenarioConfig {
            name: "A".to_string(),
            seed: 11,
            threshold_secs: 60,
            communities: vec![
                community("sio-a", Label::Sio, 40, range_200(), vec![cotweet(12, 30, 1), noise(20.0)]),
                community("sio-b", Label::Sio, 35, range_200(), vec![cotweet(10, 45, 1), noise(15.0)]),
                community("base-a", Label::NonSio, 30, range_200(), vec![noise(25.0), ring(5, 30, 7)]),
                community("base-b", Label::NonSio, 25, range_200(), vec![noise(20.0), ring(4, 30, 10)]),
                community("base-c", Label::NonSio, 20, range_200(), vec![noise(10.0)]),
                community("base-d", Label::NonSio, 15, range_200(), vec![noise(6.0)]),
            ],
        },
    );

    let transfer_baselines = |range| {
        vec![
            community("base-a", Label::NonSio, 30, range, vec![noise(20.0), ring(4, 30, 7)]),
            community("base-b", Label::NonSio, 25, range, vec![noise(15.0)]),
            community("base-c", Label::NonSio, 20, range, vec![noise(10.0)]),
            community("base-d", Label::NonSio, 15, range, vec![noise(6.0)]),
        ]
    };

    let mut b_communities = vec![
        community("sio-a", Label::Sio, 30, range_120(), vec![cotweet(10, 30, 1), noise(15.0)]),
        community("sio-b", Label::Sio, 30, range_120(), vec![cotweet(8, 30, 1), noise(12.0)]),
        community("sio-c", Label::Sio, 35, range_120(), vec![cotweet(12, 40, 1), noise(18.0)]),
    ];
    b_communities.extend(transfer_baselines(range_120()));
    library.insert(
        "B".to_string(),
        ScenarioConfig {
            name: "B".to_string(),
            seed: 22,
            threshold_secs: 60,
            communities: b_communities,
        },
    );

    let mut c_communities = vec![
        community("sio-a", Label::Sio, 30, range_120(), vec![cotweet(10, 30, 1), noise(15.0)]),
        community("sio-b", Label::Sio, 30, range_120(), vec![cotweet(8, 30, 1), noise(12.0)]),
        // Held-out campaign with a disjoint tactic: hashtags only.
        community("sio-c", Label::Sio, 35, range_120(), vec![hashtag(12, 40, 1), noise(18.0)]),
    ];
    c_communities.extend(transfer_baselines(range_120()));
    library.insert(
        "C".to_string(),
        ScenarioConfig {
            name: "C".to_string(),
            seed: 33,
            threshold_secs: 60,
            communities: c_communities,
        },
    );

    // Scenario D: eight identically configured communities; a seeded shuffle
    // marks two of them SIO, so any signal the classifier finds is spurious.
    let d_seed = 44u64;
    let mut d_communities: Vec<CommunityConfig> = (0..8)
        .map(|i| {
            community(
                &format!("comm-{i}"),
                Label::NonSio,
                30,
                range_120(),
                vec![noise(15.0), ring(4, 30, 3)],
            )
        })
        .collect();
    let mut rng = derive_rng(d_seed, &[0xD00]);
    let order = sample_indices(&mut rng, d_communities.len(), d_communities.len());
    for &idx in order.iter().take(2) {
        d_communities[idx].label = Label::Sio;
    }
    library.insert(
        "D".to_string(),
        ScenarioConfig {
            name: "D".to_string(),
            seed: d_seed,
            threshold_secs: 60,
            communities: d_communities,
        },
    );

    library.insert(
        "E".to_string(),
        ScenarioConfig {
            name: "E".to_string(),
            seed: 55,
            threshold_secs: 60,
            communities: vec![
                community("sio-a", Label::Sio, 30, range_110(), vec![hashtag(12, 30, 1), noise(15.0)]),
                community("sio-b", Label::Sio, 30, range_110(), vec![hashtag(10, 30, 1), noise(12.0)]),
                community("sio-c", Label::Sio, 35, range_110(), vec![hashtag(14, 30, 1), noise(18.0)]),
                community("base-a", Label::NonSio, 30, range_110(), vec![noise(20.0)]),
                community("base-b", Label::NonSio, 25, range_110(), vec![noise(12.0)]),
                community("base-c", Label::NonSio, 20, range_110(), vec![noise(8.0)]),
                community(
                    "base-d",
                    Label::NonSio,
                    30,
                    range_110(),
                    vec![
                        noise(15.0),
                        BehaviorSpec::EventSpike {
                            participant_count: 12,
                            intra_burst_spread_secs: 30,
                            day_offset: 60,
                        },
                    ],
                ),
            ],
        },
    );

    library
}

/// Look up a library scenario by name (case-insensitive).
pub fn scenario(name: &str) -> Option<ScenarioConfig> {
    scenario_library().remove(&name.to_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::{oracle_edges, extract_items};

    fn tiny_config(behaviors: Vec<BehaviorSpec>) -> ScenarioConfig {
        ScenarioConfig {
            name: "tiny".to_string(),
            seed: 5,
            threshold_secs: 60,
            communities: vec![community(
                "c1",
                Label::Sio,
                12,
                (
                    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
                    NaiveDate::from_ymd_opt(2019, 1, 5).unwrap(),
                ),
                behaviors,
            )],
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = scenario("A").unwrap();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        let dump = |corpus: &GeneratedCorpus| {
            let mut out = String::new();
            for community in &corpus.communities {
                for event in &community.events {
                    out.push_str(&event.to_json_line());
                    out.push('\n');
                }
            }
            out.push_str(&serde_json::to_string(&corpus.manifest).unwrap());
            out
        };
        assert_eq!(dump(&a), dump(&b));
    }

    #[test]
    fn cotweet_burst_yields_complete_graph() {
        let corpus = generate(&tiny_config(vec![cotweet(5, 10, 1)])).unwrap();
        let community = &corpus.communities[0];
        let slices = partition_by_day(community.events.clone(), "c1");
        let slice = &slices[0];
        let items = extract_items(slice, PatternKind::CoTweet, CoRetweetKey::default());
        let edges = oracle_edges(&items, 60);
        assert_eq!(edges.len(), 10, "C(5,2) = 10 edges");
        let expected = corpus.manifest.expected["c1"][&slice.date][&PatternKind::CoTweet].clone();
        assert_eq!(Manifest::expected_edges(PatternKind::CoTweet, &expected), edges);
    }

    #[test]
    fn pure_noise_creates_no_edges() {
        let corpus = generate(&tiny_config(vec![noise(40.0)])).unwrap();
        let community = &corpus.communities[0];
        assert!(!community.events.is_empty());
        let members = community
            .events
            .iter()
            .map(|e| e.author_id.clone())
            .collect();
        for slice in partition_by_day(community.events.clone(), "c1") {
            let networks = build_all(&slice, 60, &members, CoRetweetKey::default());
            for (pattern, network) in networks {
                assert!(network.is_empty(), "{pattern} should be empty");
            }
        }
        assert!(corpus.manifest.expected.is_empty());
    }

    #[test]
    fn event_spike_hits_exactly_its_day() {
        let config = scenario("E").unwrap();
        let corpus = generate(&config).unwrap();
        let spike_day = NaiveDate::from_ymd_opt(2019, 3, 2).unwrap();
        let expected = &corpus.manifest.expected["base-d"];
        assert_eq!(expected.len(), 1);
        assert_eq!(
            expected[&spike_day][&PatternKind::CoHashtag].len(),
            12
        );
        // The spike is the only coordinated activity in that community.
        let community = corpus.community("base-d").unwrap();
        let members = community
            .events
            .iter()
            .map(|e| e.author_id.clone())
            .collect();
        for slice in partition_by_day(community.events.clone(), "base-d") {
            let network = crate::netbuild::build_network(
                &slice,
                PatternKind::CoHashtag,
                60,
                &members,
                CoRetweetKey::default(),
            );
            if slice.date == spike_day {
                assert_eq!(network.node_count(), 12);
            } else {
                assert_eq!(network.node_count(), 0);
            }
        }
    }

    #[test]
    fn retweet_ring_records_hub_first() {
        let corpus = generate(&tiny_config(vec![ring(4, 20, 1)])).unwrap();
        let community = &corpus.communities[0];
        let first_day = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        let listed = &corpus.manifest.expected["c1"][&first_day][&PatternKind::Retweet];
        assert_eq!(listed.len(), 4);
        let hub = &listed[0];
        let retweets: Vec<&TweetEvent> = community
            .events
            .iter()
            .filter(|e| e.is_retweet && e.date() == first_day)
            .collect();
        assert_eq!(retweets.len(), 3);
        assert!(retweets.iter().all(|e| e.retweeted_author_id.as_ref() == Some(hub)));
        let coretweeters = &corpus.manifest.expected["c1"][&first_day][&PatternKind::CoRetweet];
        assert_eq!(coretweeters.len(), 3);
    }

    #[test]
    fn manifest_is_sound_for_every_library_scenario() {
        for (name, config) in scenario_library() {
            let corpus = generate(&config).unwrap();
            let violations = verify_manifest(&corpus, CoRetweetKey::default());
            assert!(violations.is_empty(), "scenario {name}: {violations:?}");
        }
    }

    #[test]
    fn library_scenarios_match_their_contracts() {
        let library = scenario_library();
        assert_eq!(
            library.keys().cloned().collect::<Vec<_>>(),
            vec!["A", "B", "C", "D", "E"]
        );

        let a = &library["A"];
        let sio = a.communities.iter().filter(|c| c.label == Label::Sio).count();
        assert_eq!(sio, 2);
        assert_eq!(a.communities.len() - sio, 4);
        assert!(a
            .communities
            .iter()
            .all(|c| days_inclusive(c.start, c.end) >= 180));

        // Scenario C: training campaigns co-tweet only, the held-out (lexicographically
        // last) campaign pushes hashtags only.
        let c = &library["C"];
        for community in c.communities.iter().filter(|c| c.label == Label::Sio) {
            let has_cotweet = community
                .behaviors
                .iter()
                .any(|b| matches!(b, BehaviorSpec::CotweetBurst { .. }));
            let has_hashtag = community
                .behaviors
                .iter()
                .any(|b| matches!(b, BehaviorSpec::HashtagPush { .. }));
            if community.community_id == "sio-c" {
                assert!(has_hashtag && !has_cotweet);
            } else {
                assert!(has_cotweet && !has_hashtag);
            }
        }

        // Scenario D: identical configurations, label split decided by seed.
        let d = &library["D"];
        let d_sio = d.communities.iter().filter(|c| c.label == Label::Sio).count();
        assert_eq!(d_sio, 2);
        let reference = &d.communities[0];
        for community in &d.communities {
            assert_eq!(community.behaviors, reference.behaviors);
            assert_eq!(community.n_accounts, reference.n_accounts);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = tiny_config(vec![cotweet(5, 10, 1)]);
        config.communities[0].n_accounts = 3;
        assert!(matches!(
            generate(&config).unwrap_err(),
            ConfigError::TooFewAccounts { .. }
        ));

        let config = tiny_config(vec![cotweet(5, 90, 1)]);
        assert!(matches!(
            generate(&config).unwrap_err(),
            ConfigError::SpreadExceedsThreshold { .. }
        ));

        let config = tiny_config(vec![cotweet(5, 10, 1), cotweet(4, 10, 1)]);
        assert!(matches!(
            generate(&config).unwrap_err(),
            ConfigError::PatternCollision { .. }
        ));

        let mut config = tiny_config(vec![noise(10.0)]);
        config
            .communities
            .push(config.communities[0].clone());
        assert!(matches!(
            generate(&config).unwrap_err(),
            ConfigError::DuplicateCommunityId(_)
        ));
    }

    #[test]
    fn config_json_round_trip() {
        let config = scenario("B").unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let parsed: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, config);
    }
}
