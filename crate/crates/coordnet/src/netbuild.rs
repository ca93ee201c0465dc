//! Construction of the six per-day coordination networks.
//!
//! Each pattern turns a day of community activity into an undirected simple
//! graph over accounts. The five timed patterns connect two distinct accounts
//! that produce the same key (text, retweeted tweet, hashtag, mentioned user,
//! url) within the time threshold (inclusive). The retweet pattern connects a
//! retweeter to the retweeted in-community author and ignores the threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::{CommunitySlice, TweetEvent};

/// The six coordination patterns, in the canonical order that fixes the
/// 42-dimensional feature layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Retweet,
    CoTweet,
    CoRetweet,
    CoHashtag,
    CoMention,
    CoUrl,
}

impl PatternKind {
    pub const ALL: [PatternKind; 6] = [
        PatternKind::Retweet,
        PatternKind::CoTweet,
        PatternKind::CoRetweet,
        PatternKind::CoHashtag,
        PatternKind::CoMention,
        PatternKind::CoUrl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Retweet => "retweet",
            PatternKind::CoTweet => "co_tweet",
            PatternKind::CoRetweet => "co_retweet",
            PatternKind::CoHashtag => "co_hashtag",
            PatternKind::CoMention => "co_mention",
            PatternKind::CoUrl => "co_url",
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|p| *p == self).unwrap()
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown pattern: {s}"))
    }
}

/// What two co-retweeting accounts must share: the retweeted tweet (default)
/// or merely the retweeted author.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoRetweetKey {
    #[default]
    Tweet,
    Author,
}

impl fmt::Display for CoRetweetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoRetweetKey::Tweet => "tweet",
            CoRetweetKey::Author => "author",
        })
    }
}

impl FromStr for CoRetweetKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet" => Ok(CoRetweetKey::Tweet),
            "author" => Ok(CoRetweetKey::Author),
            other => Err(format!("co-retweet key must be tweet or author, got {other}")),
        }
    }
}

/// An unordered account pair, stored with the endpoints sorted.
pub type Edge = (String, String);

pub fn edge(a: &str, b: &str) -> Edge {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Undirected simple graph of coordinating accounts for one
/// (community, day, pattern).
///
/// Nodes are exactly the edge-incident accounts: an account with no
/// coordination partner that day did not coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationNetwork {
    pub community_id: String,
    pub date: NaiveDate,
    pub pattern: PatternKind,
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<Edge>,
}

impl CoordinationNetwork {
    pub fn empty(community_id: &str, date: NaiveDate, pattern: PatternKind) -> Self {
        Self {
            community_id: community_id.to_string(),
            date,
            pattern,
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
        }
    }

    /// Add an undirected edge; self-loops are ignored.
    pub fn insert_edge(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        self.nodes.insert(a.to_string());
        self.nodes.insert(b.to_string());
        self.edges.insert(edge(a, b));
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Debug dump: a header line, then one `a<TAB>b` line per edge.
    pub fn write_dump<W: Write>(&self, mut w: W, threshold_secs: i64) -> io::Result<()> {
        writeln!(
            w,
            "# {} {} {} {}",
            self.community_id, self.date, self.pattern, threshold_secs
        )?;
        for (a, b) in &self.edges {
            writeln!(w, "{a}\t{b}")?;
        }
        Ok(())
    }
}

/// One (key, account, time) occurrence feeding a timed pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternItem {
    pub key: String,
    pub account: String,
    pub time: i64,
}

impl PatternItem {
    pub fn new(key: impl Into<String>, account: impl Into<String>, time: i64) -> Self {
        Self {
            key: key.into(),
            account: account.into(),
            time,
        }
    }
}

/// Co-tweet content key: the tweet text with URLs removed and whitespace
/// collapsed. Returns None for retweets and for text that is empty after
/// normalization.
pub fn cotweet_key(event: &TweetEvent) -> Option<String> {
    if event.is_retweet {
        return None;
    }
    let mut text = event.text.clone();
    for url in &event.urls {
        if !url.is_empty() {
            text = text.replace(url.as_str(), " ");
        }
    }
    let normalized: Vec<&str> = text
        .split_whitespace()
        .filter(|token| !is_url_token(token))
        .collect();
    if normalized.is_empty() {
        None
    } else {
        Some(normalized.join(" "))
    }
}

fn is_url_token(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.")
}

/// Extract the (key, account, time) items one slice contributes to a timed
/// pattern. One event may yield several items (e.g. multiple hashtags).
/// The retweet pattern is not item-based; see [`build_network`].
pub fn extract_items(
    slice: &CommunitySlice,
    pattern: PatternKind,
    coretweet_key: CoRetweetKey,
) -> Vec<PatternItem> {
    let mut items = Vec::new();
    for event in &slice.events {
        match pattern {
            PatternKind::Retweet => {}
            PatternKind::CoTweet => {
                if let Some(key) = cotweet_key(event) {
                    items.push(PatternItem::new(key, &*event.author_id, event.timestamp));
                }
            }
            PatternKind::CoRetweet => {
                if event.is_retweet {
                    let key = match coretweet_key {
                        CoRetweetKey::Tweet => event.retweeted_tweet_id.as_deref(),
                        CoRetweetKey::Author => event.retweeted_author_id.as_deref(),
                    };
                    if let Some(key) = key {
                        items.push(PatternItem::new(key, &*event.author_id, event.timestamp));
                    }
                }
            }
            PatternKind::CoHashtag => {
                for tag in &event.hashtags {
                    items.push(PatternItem::new(
                        tag.to_lowercase(),
                        &*event.author_id,
                        event.timestamp,
                    ));
                }
            }
            PatternKind::CoMention => {
                for user in &event.mentions {
                    items.push(PatternItem::new(
                        user.to_lowercase(),
                        &*event.author_id,
                        event.timestamp,
                    ));
                }
            }
            PatternKind::CoUrl => {
                for url in &event.urls {
                    items.push(PatternItem::new(&**url, &*event.author_id, event.timestamp));
                }
            }
        }
    }
    items
}

/// Pair items with a per-key time-sorted sweep: for every two items by
/// distinct accounts with the same key and |t1 - t2| <= threshold, emit the
/// account pair.
pub fn sweep_edges(items: &[PatternItem], threshold_secs: i64) -> BTreeSet<Edge> {
    debug_assert!(threshold_secs > 0, "threshold must be positive");
    let mut by_key: HashMap<&str, Vec<(i64, &str)>> = HashMap::new();
    for item in items {
        by_key
            .entry(item.key.as_str())
            .or_default()
            .push((item.time, item.account.as_str()));
    }
    let mut edges = BTreeSet::new();
    for group in by_key.values_mut() {
        group.sort_unstable();
        for i in 0..group.len() {
            let (t_i, acct_i) = group[i];
            for &(t_j, acct_j) in group.iter().skip(i + 1) {
                if t_j - t_i > threshold_secs {
                    break;
                }
                if acct_i != acct_j {
                    edges.insert(edge(acct_i, acct_j));
                }
            }
        }
    }
    edges
}

/// Exhaustive O(n^2) pairing over every item pair. Validation oracle for
/// [`sweep_edges`]; intentionally kept free of the sweep's grouping logic.
pub fn oracle_edges(items: &[PatternItem], threshold_secs: i64) -> BTreeSet<Edge> {
    let mut edges = BTreeSet::new();
    for (i, a) in items.iter().enumerate() {
        for b in items.iter().skip(i + 1) {
            if a.key == b.key
                && a.account != b.account
                && (a.time - b.time).abs() <= threshold_secs
            {
                edges.insert(edge(&a.account, &b.account));
            }
        }
    }
    edges
}

/// Build one pattern's coordination network for a day of community activity.
///
/// `community_members` gates the retweet pattern only: a retweet produces an
/// edge just when the retweeted author belongs to the community. The five
/// timed patterns use the inclusive threshold; the retweet pattern ignores it.
pub fn build_network(
    slice: &CommunitySlice,
    pattern: PatternKind,
    threshold_secs: i64,
    community_members: &BTreeSet<String>,
    coretweet_key: CoRetweetKey,
) -> CoordinationNetwork {
    let mut network = CoordinationNetwork::empty(&slice.community_id, slice.date, pattern);
    match pattern {
        PatternKind::Retweet => {
            for event in &slice.events {
                if !event.is_retweet {
                    continue;
                }
                if let Some(retweeted) = &event.retweeted_author_id {
                    if community_members.contains(retweeted) {
                        network.insert_edge(&event.author_id, retweeted);
                    }
                }
            }
        }
        _ => {
            let items = extract_items(slice, pattern, coretweet_key);
            for (a, b) in sweep_edges(&items, threshold_secs) {
                network.insert_edge(&a, &b);
            }
        }
    }
    network
}

/// Build all six networks for one slice.
pub fn build_all(
    slice: &CommunitySlice,
    threshold_secs: i64,
    community_members: &BTreeSet<String>,
    coretweet_key: CoRetweetKey,
) -> BTreeMap<PatternKind, CoordinationNetwork> {
    PatternKind::ALL
        .into_iter()
        .map(|pattern| {
            (
                pattern,
                build_network(slice, pattern, threshold_secs, community_members, coretweet_key),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()
    }

    fn tweet(id: &str, author: &str, time: i64, text: &str) -> TweetEvent {
        TweetEvent {
            tweet_id: id.to_string(),
            author_id: author.to_string(),
            timestamp: time,
            text: text.to_string(),
            hashtags: vec![],
            mentions: vec![],
            urls: vec![],
            is_retweet: false,
            retweeted_tweet_id: None,
            retweeted_author_id: None,
        }
    }

    fn retweet(id: &str, author: &str, time: i64, rt_id: &str, rt_author: &str) -> TweetEvent {
        TweetEvent {
            tweet_id: id.to_string(),
            author_id: author.to_string(),
            timestamp: time,
            text: format!("RT {rt_id}"),
            hashtags: vec![],
            mentions: vec![],
            urls: vec![],
            is_retweet: true,
            retweeted_tweet_id: Some(rt_id.to_string()),
            retweeted_author_id: Some(rt_author.to_string()),
        }
    }

    fn slice_of(events: Vec<TweetEvent>) -> CommunitySlice {
        let mut events = events;
        events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
        CommunitySlice {
            community_id: "c".to_string(),
            date: day(),
            events,
        }
    }

    fn members(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn co_hashtag_respects_threshold() {
        let mut a = tweet("1", "A", 0, "x");
        a.hashtags = vec!["x".into()];
        let mut b = tweet("2", "B", 30, "x");
        b.hashtags = vec!["x".into()];
        let mut c = tweet("3", "C", 90, "x");
        c.hashtags = vec!["x".into()];
        let slice = slice_of(vec![a, b, c]);
        let net = build_network(
            &slice,
            PatternKind::CoHashtag,
            60,
            &members(&["A", "B", "C"]),
            CoRetweetKey::default(),
        );
        let expected: BTreeSet<Edge> = [edge("A", "B"), edge("B", "C")].into();
        assert_eq!(net.edges, expected);
        // 90 - 0 > 60, so {A,C} is excluded; the oracle agrees.
        let items = extract_items(&slice, PatternKind::CoHashtag, CoRetweetKey::default());
        assert_eq!(oracle_edges(&items, 60), expected);
    }

    #[test]
    fn retweet_requires_community_membership_and_dedups() {
        let events = vec![
            retweet("1", "A", 10, "t1", "B"),
            retweet("2", "A", 500, "t2", "B"),
            retweet("3", "C", 20, "t3", "D"),
        ];
        let slice = slice_of(events);
        let net = build_network(
            &slice,
            PatternKind::Retweet,
            60,
            &members(&["A", "B", "C"]),
            CoRetweetKey::default(),
        );
        assert_eq!(net.edges, [edge("A", "B")].into());
        assert_eq!(net.nodes, members(&["A", "B"]));
    }

    #[test]
    fn self_retweets_produce_no_edge() {
        let slice = slice_of(vec![retweet("1", "A", 10, "t1", "A")]);
        let net = build_network(
            &slice,
            PatternKind::Retweet,
            60,
            &members(&["A"]),
            CoRetweetKey::default(),
        );
        assert!(net.is_empty());
    }

    #[test]
    fn co_tweet_matches_after_url_removal() {
        let mut a = tweet("1", "A", 0, "Vote now! https://t.co/xyz");
        a.urls = vec!["https://t.co/xyz".into()];
        let b = tweet("2", "B", 10, "Vote now!");
        let slice = slice_of(vec![a, b]);
        let net = build_network(
            &slice,
            PatternKind::CoTweet,
            60,
            &members(&["A", "B"]),
            CoRetweetKey::default(),
        );
        assert_eq!(net.edges, [edge("A", "B")].into());
    }

    #[test]
    fn cotweet_key_drops_url_tokens_and_collapses_whitespace() {
        let mut e = tweet("1", "A", 0, "see  www.example.com  this   now");
        assert_eq!(cotweet_key(&e).unwrap(), "see this now");
        e.text = "https://only.url".into();
        assert_eq!(cotweet_key(&e), None);
        e.text = String::new();
        assert_eq!(cotweet_key(&e), None);
    }

    #[test]
    fn co_url_matches_shortened_urls_verbatim() {
        let mut a = tweet("1", "A", 0, "look");
        a.urls = vec!["bit.ly/abc".into()];
        let mut b = tweet("2", "B", 30, "see");
        b.urls = vec!["bit.ly/abc".into()];
        let slice = slice_of(vec![a, b]);
        let net = build_network(
            &slice,
            PatternKind::CoUrl,
            60,
            &members(&["A", "B"]),
            CoRetweetKey::default(),
        );
        assert_eq!(net.edges, [edge("A", "B")].into());
    }

    #[test]
    fn coretweet_key_switch_changes_edges() {
        // Two accounts retweet different tweets by the same author.
        let events = vec![
            retweet("1", "A", 0, "t1", "X"),
            retweet("2", "B", 10, "t2", "X"),
        ];
        let slice = slice_of(events);
        let by_tweet = build_network(&slice, PatternKind::CoRetweet, 60, &members(&[]), CoRetweetKey::Tweet);
        assert!(by_tweet.is_empty());
        let by_author =
            build_network(&slice, PatternKind::CoRetweet, 60, &members(&[]), CoRetweetKey::Author);
        assert_eq!(by_author.edges, [edge("A", "B")].into());
    }

    #[test]
    fn oracle_examples() {
        let items = vec![
            PatternItem::new("k", "A", 0),
            PatternItem::new("k", "B", 30),
            PatternItem::new("k", "C", 90),
        ];
        assert_eq!(oracle_edges(&items, 60), [edge("A", "B"), edge("B", "C")].into());
        assert!(oracle_edges(&items[..1], 60).is_empty());
        let same_account = vec![PatternItem::new("k", "A", 0), PatternItem::new("k", "A", 0)];
        assert!(oracle_edges(&same_account, 60).is_empty());
    }

    #[test]
    fn build_all_on_empty_slice_is_empty() {
        let slice = CommunitySlice::empty("c", day());
        let nets = build_all(&slice, 60, &members(&[]), CoRetweetKey::default());
        assert_eq!(nets.len(), 6);
        assert!(nets.values().all(|n| n.is_empty()));
    }

    #[test]
    fn retweet_only_slices_leave_timed_text_patterns_empty() {
        let events = vec![
            retweet("1", "A", 0, "t1", "X"),
            retweet("2", "B", 10, "t1", "X"),
        ];
        let slice = slice_of(events);
        let nets = build_all(&slice, 60, &members(&["A", "B", "X"]), CoRetweetKey::default());
        assert!(!nets[&PatternKind::CoRetweet].is_empty());
        assert!(!nets[&PatternKind::Retweet].is_empty());
        for pattern in [PatternKind::CoTweet, PatternKind::CoHashtag, PatternKind::CoMention, PatternKind::CoUrl] {
            assert!(nets[&pattern].is_empty());
        }
    }

    fn item_strategy() -> impl Strategy<Value = Vec<PatternItem>> {
        proptest::collection::vec(
            (0u8..6, 0u8..12, 0i64..2_000),
            0..120,
        )
        .prop_map(|raw| {
            raw.into_iter()
                .map(|(k, a, t)| PatternItem::new(format!("k{k}"), format!("a{a}"), t))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn sweep_equals_oracle(items in item_strategy(), threshold in 1i64..400) {
            prop_assert_eq!(sweep_edges(&items, threshold), oracle_edges(&items, threshold));
        }

        #[test]
        fn threshold_monotonicity(items in item_strategy(), t1 in 1i64..200, extra in 0i64..200) {
            let small = sweep_edges(&items, t1);
            let large = sweep_edges(&items, t1 + extra);
            prop_assert!(small.is_subset(&large));
        }

        #[test]
        fn pairing_is_permutation_invariant(items in item_strategy(), threshold in 1i64..400) {
            let mut reversed = items.clone();
            reversed.reverse();
            prop_assert_eq!(sweep_edges(&items, threshold), sweep_edges(&reversed, threshold));
        }

        #[test]
        fn no_self_loops(items in item_strategy(), threshold in 1i64..400) {
            for (a, b) in sweep_edges(&items, threshold) {
                prop_assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn retweet_network_is_threshold_independent() {
        let events = vec![
            retweet("1", "A", 0, "t1", "B"),
            retweet("2", "C", 5_000, "t2", "B"),
        ];
        let slice = slice_of(events);
        let m = members(&["A", "B", "C"]);
        let n1 = build_network(&slice, PatternKind::Retweet, 1, &m, CoRetweetKey::default());
        let n2 = build_network(&slice, PatternKind::Retweet, 86_400, &m, CoRetweetKey::default());
        assert_eq!(n1, n2);
    }

    #[test]
    fn dump_format_has_header_and_tab_separated_edges() {
        let mut net = CoordinationNetwork::empty("c", day(), PatternKind::CoUrl);
        net.insert_edge("b", "a");
        let mut out = Vec::new();
        net.write_dump(&mut out, 60).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "# c 2019-01-01 co_url 60\na\tb\n"
        );
    }
}
