//! Per-network statistics, 42-dimensional feature vectors, weekly unions
//! and activity time series.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::{CoordinationNetwork, PatternKind};

/// Statistic names, in the order they appear within each pattern's block of
/// the feature vector.
pub const STAT_NAMES: [&str; 7] = [
    "nodes",
    "edges",
    "largest_cc",
    "mean_cc",
    "std_dev_cc",
    "mean_deg",
    "std_dev_deg",
];

pub const STATS_PER_PATTERN: usize = STAT_NAMES.len();
pub const FEATURE_COUNT: usize = PatternKind::ALL.len() * STATS_PER_PATTERN;

/// The seven structural statistics of one coordination network.
///
/// Standard deviations are population standard deviations (divide by n); an
/// empty network scores zero on every statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: u64,
    pub edges: u64,
    pub largest_cc: u64,
    pub mean_cc: f64,
    pub std_dev_cc: f64,
    pub mean_deg: f64,
    pub std_dev_deg: f64,
}

impl NetworkStats {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_values(&self) -> [f64; STATS_PER_PATTERN] {
        [
            self.nodes as f64,
            self.edges as f64,
            self.largest_cc as f64,
            self.mean_cc,
            self.std_dev_cc,
            self.mean_deg,
            self.std_dev_deg,
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Daily,
    Weekly,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Daily => "daily",
            Aggregation::Weekly => "weekly",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "daily" => Ok(Aggregation::Daily),
            "weekly" => Ok(Aggregation::Weekly),
            other => Err(format!("aggregation must be daily or weekly, got {other}")),
        }
    }
}

/// Binary class label: SIO-like coordinated activity or legitimate activity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "sio")]
    Sio,
    #[serde(rename = "non-sio")]
    NonSio,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Sio)
    }

    /// CSV encoding: 1 for SIO, 0 for non-SIO.
    pub fn as_flag(self) -> &'static str {
        match self {
            Label::Sio => "1",
            Label::NonSio => "0",
        }
    }

    pub fn from_flag(s: &str) -> Result<Self, String> {
        match s {
            "1" => Ok(Label::Sio),
            "0" => Ok(Label::NonSio),
            other => Err(format!("label must be 1 or 0, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Sio => "sio",
            Label::NonSio => "non-sio",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sio" => Ok(Label::Sio),
            "non-sio" => Ok(Label::NonSio),
            other => Err(format!("label must be sio or non-sio, got {other}")),
        }
    }
}

/// The 42 statistics of one (community, day) in canonical layout: for each
/// pattern in canonical order, the seven statistics in [`STAT_NAMES`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub community_id: String,
    pub date: NaiveDate,
    pub aggregation: Aggregation,
    pub label: Label,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// The seven values belonging to one pattern.
    pub fn pattern_slice(&self, pattern: PatternKind) -> &[f64] {
        let start = pattern.index() * STATS_PER_PATTERN;
        &self.values[start..start + STATS_PER_PATTERN]
    }
}

/// Column names of the 42 feature dimensions, e.g. `retweet_nodes` ..
/// `co_url_std_dev_deg`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for pattern in PatternKind::ALL {
        for stat in STAT_NAMES {
            names.push(format!("{pattern}_{stat}"));
        }
    }
    names
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Compute the seven statistics of a network.
///
/// Connected components are found over the node set (isolated nodes count as
/// singleton components), degree is the number of incident edges.
pub fn compute_stats(network: &CoordinationNetwork) -> NetworkStats {
    if network.nodes.is_empty() {
        return NetworkStats::zero();
    }
    let index: BTreeMap<&str, usize> = network
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = index.len();
    let mut dsu = DisjointSet::new(n);
    let mut degree = vec![0u64; n];
    for (a, b) in &network.edges {
        let (ia, ib) = (index[a.as_str()], index[b.as_str()]);
        degree[ia] += 1;
        degree[ib] += 1;
        dsu.union(ia, ib);
    }
    let mut component_sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for i in 0..n {
        *component_sizes.entry(dsu.find(i)).or_insert(0) += 1;
    }
    let sizes: Vec<f64> = component_sizes.values().map(|&s| s as f64).collect();
    let degrees: Vec<f64> = degree.iter().map(|&d| d as f64).collect();
    let mean_cc = n as f64 / sizes.len() as f64;
    let mean_deg = degrees.iter().sum::<f64>() / n as f64;
    NetworkStats {
        nodes: n as u64,
        edges: network.edges.len() as u64,
        largest_cc: component_sizes.values().copied().max().unwrap_or(0),
        mean_cc,
        std_dev_cc: population_std(&sizes, mean_cc),
        mean_deg,
        std_dev_deg: population_std(&degrees, mean_deg),
    }
}

/// The 42 values of the canonical layout. Patterns missing from the map
/// contribute empty-network (all-zero) stats.
pub fn concat_stats(stats_by_pattern: &BTreeMap<PatternKind, NetworkStats>) -> Vec<f64> {
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for pattern in PatternKind::ALL {
        let stats = stats_by_pattern.get(&pattern).copied().unwrap_or_default();
        values.extend_from_slice(&stats.as_values());
    }
    values
}

/// Concatenate per-pattern statistics into a labeled feature vector.
pub fn assemble_vector(
    stats_by_pattern: &BTreeMap<PatternKind, NetworkStats>,
    community_id: &str,
    date: NaiveDate,
    aggregation: Aggregation,
    label: Label,
) -> FeatureVector {
    FeatureVector {
        community_id: community_id.to_string(),
        date,
        aggregation,
        label,
        values: concat_stats(stats_by_pattern),
    }
}

/// Union the edges (and nodes) of up to seven consecutive daily networks of
/// one (community, pattern); the result carries the last input's date.
pub fn weekly_union(days: &[CoordinationNetwork]) -> CoordinationNetwork {
    assert!(!days.is_empty(), "weekly union needs at least one network");
    debug_assert!(days.len() <= 7, "weekly window spans at most seven days");
    let last = days.last().unwrap();
    let mut union = CoordinationNetwork::empty(&last.community_id, last.date, last.pattern);
    for day in days {
        debug_assert_eq!(day.community_id, last.community_id);
        debug_assert_eq!(day.pattern, last.pattern);
        union.nodes.extend(day.nodes.iter().cloned());
        union.edges.extend(day.edges.iter().cloned());
    }
    union
}

/// Per-pattern daily node-count series for one community's networks.
///
/// Every date in the observed span appears in every pattern's series, with 0
/// for days where the pattern had no network or no nodes.
pub fn activity_series(
    networks: &[CoordinationNetwork],
) -> BTreeMap<PatternKind, BTreeMap<NaiveDate, u64>> {
    let mut series: BTreeMap<PatternKind, BTreeMap<NaiveDate, u64>> =
        PatternKind::ALL.into_iter().map(|p| (p, BTreeMap::new())).collect();
    let Some(first) = networks.iter().map(|n| n.date).min() else {
        return series;
    };
    let last = networks.iter().map(|n| n.date).max().unwrap();
    let mut date = first;
    while date <= last {
        for per_pattern in series.values_mut() {
            per_pattern.insert(date, 0);
        }
        date = date.succ_opt().expect("date range in bounds");
    }
    for network in networks {
        let slot = series
            .get_mut(&network.pattern)
            .unwrap()
            .get_mut(&network.date)
            .unwrap();
        *slot = (*slot).max(network.node_count() as u64);
    }
    series
}

#[derive(Debug, Error)]
pub enum FeatureCsvError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature csv row {row}: {reason}")]
    Row { row: usize, reason: String },
}

/// Write feature vectors as CSV: `community_id,date,aggregation,label`
/// followed by the 42 feature columns.
pub fn write_feature_csv<W: Write>(w: W, rows: &[FeatureVector]) -> Result<(), FeatureCsvError> {
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec![
        "community_id".to_string(),
        "date".to_string(),
        "aggregation".to_string(),
        "label".to_string(),
    ];
    header.extend(feature_names());
    writer.write_record(&header)?;
    for row in rows {
        debug_assert_eq!(row.values.len(), FEATURE_COUNT);
        let mut record = vec![
            row.community_id.clone(),
            row.date.to_string(),
            row.aggregation.to_string(),
            row.label.as_flag().to_string(),
        ];
        record.extend(row.values.iter().map(|v| format_value(*v)));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn format_value(v: f64) -> String {
    // Shortest round-trip float formatting keeps the CSV exact and stable.
    let mut buf = format!("{v:?}");
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

/// Read a feature CSV produced by [`write_feature_csv`].
pub fn read_feature_csv<R: Read>(r: R) -> Result<Vec<FeatureVector>, FeatureCsvError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 2; // header is row 1
        let fail = |reason: String| FeatureCsvError::Row { row: row_no, reason };
        if record.len() != 4 + FEATURE_COUNT {
            return Err(fail(format!(
                "expected {} columns, got {}",
                4 + FEATURE_COUNT,
                record.len()
            )));
        }
        let date = record[1]
            .parse::<NaiveDate>()
            .map_err(|e| fail(format!("bad date: {e}")))?;
        let aggregation = record[2].parse::<Aggregation>().map_err(&fail)?;
        let label = Label::from_flag(&record[3]).map_err(&fail)?;
        let mut values = Vec::with_capacity(FEATURE_COUNT);
        for field in record.iter().skip(4) {
            let v: f64 = field.parse().map_err(|e| fail(format!("bad value: {e}")))?;
            if !v.is_finite() {
                return Err(fail("feature values must be finite".into()));
            }
            values.push(v);
        }
        rows.push(FeatureVector {
            community_id: record[0].to_string(),
            date,
            aggregation,
            label,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::edge;
    use proptest::prelude::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 1, d).unwrap()
    }

    fn network(pattern: PatternKind, date: NaiveDate, edges: &[(&str, &str)]) -> CoordinationNetwork {
        let mut net = CoordinationNetwork::empty("c", date, pattern);
        for (a, b) in edges {
            net.insert_edge(a, b);
        }
        net
    }

    #[test]
    fn stats_with_isolated_node() {
        // Node membership overridden by hand: netbuild never emits isolates.
        let mut net = network(PatternKind::CoTweet, day(1), &[("a", "b"), ("b", "c")]);
        net.nodes.insert("d".to_string());
        let stats = compute_stats(&net);
        assert_eq!(stats.nodes, 4);
        assert_eq!(stats.edges, 2);
        assert_eq!(stats.largest_cc, 3);
        assert!((stats.mean_cc - 2.0).abs() < 1e-12);
        assert!((stats.std_dev_cc - 1.0).abs() < 1e-12);
        assert!((stats.mean_deg - 1.0).abs() < 1e-12);
        assert!((stats.std_dev_deg - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((stats.std_dev_deg - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn empty_network_scores_zero() {
        let net = CoordinationNetwork::empty("c", day(1), PatternKind::Retweet);
        assert_eq!(compute_stats(&net), NetworkStats::zero());
    }

    #[test]
    fn single_edge_stats() {
        let net = network(PatternKind::Retweet, day(1), &[("a", "b")]);
        let stats = compute_stats(&net);
        assert_eq!(
            stats,
            NetworkStats {
                nodes: 2,
                edges: 1,
                largest_cc: 2,
                mean_cc: 2.0,
                std_dev_cc: 0.0,
                mean_deg: 1.0,
                std_dev_deg: 0.0,
            }
        );
    }

    #[test]
    fn assemble_layout_places_co_tweet_at_7_to_13() {
        let mut stats = BTreeMap::new();
        stats.insert(
            PatternKind::CoTweet,
            NetworkStats {
                nodes: 2,
                edges: 1,
                largest_cc: 2,
                mean_cc: 2.0,
                std_dev_cc: 0.0,
                mean_deg: 1.0,
                std_dev_deg: 0.0,
            },
        );
        let v = assemble_vector(&stats, "c", day(1), Aggregation::Daily, Label::Sio);
        assert_eq!(v.values.len(), FEATURE_COUNT);
        for (i, value) in v.values.iter().enumerate() {
            if (7..14).contains(&i) {
                continue;
            }
            assert_eq!(*value, 0.0, "index {i} should be zero");
        }
        assert_eq!(&v.values[7..14], &[2.0, 1.0, 2.0, 2.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn assemble_empty_map_is_all_zero() {
        let v = assemble_vector(&BTreeMap::new(), "c", day(1), Aggregation::Daily, Label::NonSio);
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn assemble_round_trips_per_pattern_slices() {
        let mut stats = BTreeMap::new();
        for (i, pattern) in PatternKind::ALL.into_iter().enumerate() {
            stats.insert(
                pattern,
                NetworkStats {
                    nodes: i as u64 + 1,
                    edges: i as u64,
                    largest_cc: 1,
                    mean_cc: 1.0,
                    std_dev_cc: 0.0,
                    mean_deg: 0.5,
                    std_dev_deg: 0.25,
                },
            );
        }
        let v = assemble_vector(&stats, "c", day(1), Aggregation::Weekly, Label::Sio);
        for pattern in PatternKind::ALL {
            assert_eq!(v.pattern_slice(pattern), stats[&pattern].as_values());
        }
    }

    #[test]
    fn weekly_union_merges_and_dedups() {
        let d1 = network(PatternKind::CoUrl, day(1), &[("a", "b")]);
        let empty: Vec<CoordinationNetwork> = (2..7)
            .map(|d| CoordinationNetwork::empty("c", day(d), PatternKind::CoUrl))
            .collect();
        let d7 = network(PatternKind::CoUrl, day(7), &[("b", "c")]);
        let mut days = vec![d1];
        days.extend(empty);
        days.push(d7);
        let union = weekly_union(&days);
        assert_eq!(union.date, day(7));
        assert_eq!(union.nodes, ["a", "b", "c"].map(String::from).into());
        assert_eq!(union.edges, [edge("a", "b"), edge("b", "c")].into());

        let all_empty: Vec<CoordinationNetwork> = (1..8)
            .map(|d| CoordinationNetwork::empty("c", day(d), PatternKind::CoUrl))
            .collect();
        assert!(weekly_union(&all_empty).is_empty());

        let repeated: Vec<CoordinationNetwork> = (1..8)
            .map(|d| network(PatternKind::CoUrl, day(d), &[("a", "b")]))
            .collect();
        assert_eq!(weekly_union(&repeated).edges.len(), 1);
    }

    #[test]
    fn activity_series_reports_missing_days_as_zero() {
        let nets = vec![network(PatternKind::CoHashtag, day(3), &[("a", "b"), ("c", "d"), ("a", "e")])];
        let series = activity_series(&nets);
        assert_eq!(series[&PatternKind::CoHashtag][&day(3)], 5);
        for pattern in PatternKind::ALL {
            if pattern != PatternKind::CoHashtag {
                assert_eq!(series[&pattern][&day(3)], 0);
            }
        }

        let empty = activity_series(&[]);
        assert!(empty.values().all(|s| s.is_empty()));
    }

    #[test]
    fn feature_csv_round_trip() {
        let mut stats = BTreeMap::new();
        stats.insert(
            PatternKind::Retweet,
            NetworkStats {
                nodes: 3,
                edges: 2,
                largest_cc: 3,
                mean_cc: 3.0,
                std_dev_cc: 0.0,
                mean_deg: 4.0 / 3.0,
                std_dev_deg: 0.4714045207910317,
            },
        );
        let rows = vec![assemble_vector(&stats, "c1", day(2), Aggregation::Daily, Label::Sio)];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("community_id,date,aggregation,label,retweet_nodes,"));
        assert!(text.contains("co_url_std_dev_deg"));
        let parsed = read_feature_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed, rows);
    }

    // Independent check used by the random-graph properties below.
    fn brute_force_cc_sizes(net: &CoordinationNetwork) -> Vec<u64> {
        let nodes: Vec<&String> = net.nodes.iter().collect();
        let mut visited: BTreeMap<&str, bool> =
            nodes.iter().map(|n| (n.as_str(), false)).collect();
        let mut sizes = Vec::new();
        for start in &nodes {
            if visited[start.as_str()] {
                continue;
            }
            let mut queue = vec![start.as_str()];
            let mut size = 0u64;
            while let Some(current) = queue.pop() {
                if std::mem::replace(visited.get_mut(current).unwrap(), true) {
                    continue;
                }
                size += 1;
                for (a, b) in &net.edges {
                    if a == current {
                        queue.push(b);
                    } else if b == current {
                        queue.push(a);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }

    fn random_network_strategy() -> impl Strategy<Value = CoordinationNetwork> {
        proptest::collection::vec((0u8..30, 0u8..30), 0..120).prop_map(|pairs| {
            let mut net = CoordinationNetwork::empty("c", day(1), PatternKind::CoTweet);
            for (a, b) in pairs {
                net.insert_edge(&format!("n{a}"), &format!("n{b}"));
            }
            net
        })
    }

    proptest! {
        #[test]
        fn stats_match_brute_force_components(net in random_network_strategy()) {
            let stats = compute_stats(&net);
            let mut sizes = brute_force_cc_sizes(&net);
            sizes.sort_unstable();
            let n: u64 = sizes.iter().sum();
            prop_assert_eq!(stats.nodes, n);
            prop_assert_eq!(stats.largest_cc, sizes.last().copied().unwrap_or(0));
            if n > 0 {
                // Handshake identity: mean degree equals 2E/V.
                prop_assert!((stats.mean_deg - 2.0 * stats.edges as f64 / n as f64).abs() < 1e-12);
                // Component identity: mean component size equals V / #components.
                prop_assert!((stats.mean_cc - n as f64 / sizes.len() as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn disjoint_edge_never_decreases_counts(net in random_network_strategy()) {
            let before = compute_stats(&net);
            let mut grown = net;
            grown.insert_edge("zz_fresh_1", "zz_fresh_2");
            let after = compute_stats(&grown);
            prop_assert!(after.nodes >= before.nodes);
            prop_assert!(after.edges >= before.edges);
            prop_assert!(after.largest_cc >= before.largest_cc);
        }
    }
}
