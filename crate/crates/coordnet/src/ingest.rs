//! Parsing of tweet-event streams and partitioning into UTC calendar-day
//! slices.
//!
//! The input format is one JSON object per line. Required keys: `tweet_id`,
//! `author_id`, `timestamp` (integer epoch seconds or an RFC 3339 string) and
//! `text`. Optional keys: `hashtags`, `mentions`, `urls` (string arrays),
//! `retweeted_tweet_id` and `retweeted_author_id`. Whether a record is a
//! retweet is derived from the presence of `retweeted_tweet_id`, never stored.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, NaiveDate, Utc};
use serde_json::Value;
use thiserror::Error;

pub const SECS_PER_DAY: i64 = 86_400;

/// One normalized tweet or retweet.
///
/// `hashtags` and `mentions` are lowercased at parse time; `urls` are kept
/// verbatim (shortened links are matched as-is downstream, never expanded).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TweetEvent {
    pub tweet_id: String,
    pub author_id: String,
    /// UTC epoch seconds, always >= 0.
    pub timestamp: i64,
    pub text: String,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
    pub is_retweet: bool,
    pub retweeted_tweet_id: Option<String>,
    pub retweeted_author_id: Option<String>,
}

impl TweetEvent {
    /// UTC calendar date containing this event.
    pub fn date(&self) -> NaiveDate {
        date_of_timestamp(self.timestamp)
    }

    /// Render the event as one line of the input schema.
    ///
    /// Re-parsing the line yields an equal event.
    pub fn to_json_line(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("tweet_id".into(), Value::String(self.tweet_id.clone()));
        obj.insert("author_id".into(), Value::String(self.author_id.clone()));
        obj.insert("timestamp".into(), Value::from(self.timestamp));
        obj.insert("text".into(), Value::String(self.text.clone()));
        obj.insert("hashtags".into(), string_array(&self.hashtags));
        obj.insert("mentions".into(), string_array(&self.mentions));
        obj.insert("urls".into(), string_array(&self.urls));
        if let Some(id) = &self.retweeted_tweet_id {
            obj.insert("retweeted_tweet_id".into(), Value::String(id.clone()));
        }
        if let Some(id) = &self.retweeted_author_id {
            obj.insert("retweeted_author_id".into(), Value::String(id.clone()));
        }
        Value::Object(obj).to_string()
    }
}

fn string_array(items: &[String]) -> Value {
    Value::Array(items.iter().cloned().map(Value::String).collect())
}

pub fn date_of_timestamp(timestamp: i64) -> NaiveDate {
    DateTime::<Utc>::from_timestamp(timestamp, 0)
        .expect("epoch seconds in supported range")
        .date_naive()
}

/// All events of one community on one UTC day, sorted by (timestamp,
/// tweet_id).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunitySlice {
    pub community_id: String,
    pub date: NaiveDate,
    pub events: Vec<TweetEvent>,
}

impl CommunitySlice {
    pub fn empty(community_id: &str, date: NaiveDate) -> Self {
        Self {
            community_id: community_id.to_string(),
            date,
            events: Vec::new(),
        }
    }
}

/// A record that could not be parsed, with its 1-based line number.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// How to handle malformed lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// First malformed line aborts the parse.
    Strict,
    /// Malformed lines are skipped and reported in the outcome.
    #[default]
    Lenient,
}

#[derive(Clone, Debug, Default)]
pub struct ParseOutcome {
    pub events: Vec<TweetEvent>,
    /// Records skipped in lenient mode, in input order.
    pub skipped: Vec<RecordError>,
}

/// Parse a line-delimited event stream. Blank lines are ignored.
pub fn parse_events<R: BufRead>(reader: R, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
    let mut outcome = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_event_line(&line, idx + 1) {
            Ok(event) => outcome.events.push(event),
            Err(err) => match mode {
                ParseMode::Strict => return Err(err.into()),
                ParseMode::Lenient => outcome.skipped.push(err),
            },
        }
    }
    Ok(outcome)
}

/// Parse a single record. `line_no` is used only for error reporting.
pub fn parse_event_line(line: &str, line_no: usize) -> Result<TweetEvent, RecordError> {
    let fail = |reason: String| RecordError {
        line: line_no,
        reason,
    };
    let value: Value =
        serde_json::from_str(line).map_err(|e| fail(format!("invalid record: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| fail("record is not an object".into()))?;

    let required_string = |key: &str| -> Result<String, RecordError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(fail(format!("field {key} must be a string"))),
            None => Err(fail(format!("missing required field {key}"))),
        }
    };

    let tweet_id = required_string("tweet_id")?;
    let author_id = required_string("author_id")?;
    let text = required_string("text")?;
    let timestamp = match obj.get("timestamp") {
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| fail("timestamp must be an integer".into()))?,
        Some(Value::String(s)) => DateTime::parse_from_rfc3339(s)
            .map_err(|e| fail(format!("timestamp is not RFC 3339: {e}")))?
            .timestamp(),
        Some(_) => return Err(fail("timestamp must be an integer or RFC 3339 string".into())),
        None => return Err(fail("missing required field timestamp".into())),
    };
    if timestamp < 0 {
        return Err(fail("timestamp must not precede the epoch".into()));
    }

    let entity_list = |key: &str, lowercase: bool| -> Result<Vec<String>, RecordError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let s = item
                        .as_str()
                        .ok_or_else(|| fail(format!("field {key} must contain strings")))?;
                    let s = if lowercase { s.to_lowercase() } else { s.to_string() };
                    if !s.is_empty() {
                        out.push(s);
                    }
                }
                Ok(out)
            }
            Some(_) => Err(fail(format!("field {key} must be an array"))),
        }
    };

    let optional_string = |key: &str| -> Result<Option<String>, RecordError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(fail(format!("field {key} must be a string"))),
        }
    };

    let retweeted_tweet_id = optional_string("retweeted_tweet_id")?;
    let retweeted_author_id = optional_string("retweeted_author_id")?;

    Ok(TweetEvent {
        tweet_id,
        author_id,
        timestamp,
        text,
        hashtags: entity_list("hashtags", true)?,
        mentions: entity_list("mentions", true)?,
        urls: entity_list("urls", false)?,
        is_retweet: retweeted_tweet_id.is_some(),
        retweeted_tweet_id,
        retweeted_author_id,
    })
}

/// Split events into per-UTC-day slices for one community.
///
/// Days without events produce no slice; downstream treats absent slices as
/// empty networks. Within a slice, events are ordered by timestamp with ties
/// broken by tweet_id.
pub fn partition_by_day(events: Vec<TweetEvent>, community_id: &str) -> Vec<CommunitySlice> {
    let mut by_day: BTreeMap<NaiveDate, Vec<TweetEvent>> = BTreeMap::new();
    for event in events {
        by_day.entry(event.date()).or_default().push(event);
    }
    by_day
        .into_iter()
        .map(|(date, mut events)| {
            events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
            CommunitySlice {
                community_id: community_id.to_string(),
                date,
                events,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn event(tweet_id: &str, author: &str, timestamp: i64) -> TweetEvent {
        TweetEvent {
            tweet_id: tweet_id.to_string(),
            author_id: author.to_string(),
            timestamp,
            text: String::new(),
            hashtags: vec![],
            mentions: vec![],
            urls: vec![],
            is_retweet: false,
            retweeted_tweet_id: None,
            retweeted_author_id: None,
        }
    }

    #[test]
    fn hashtags_are_case_folded() {
        let line = r#"{"tweet_id":"1","author_id":"u1","timestamp":100,"text":"Hello #VoteNow","hashtags":["VoteNow"]}"#;
        let event = parse_event_line(line, 1).unwrap();
        assert_eq!(event.hashtags, vec!["votenow"]);
        assert!(!event.is_retweet);
    }

    #[test]
    fn missing_author_id_is_reported_with_line() {
        let line = r#"{"tweet_id":"1","timestamp":100,"text":"x"}"#;
        let err = parse_event_line(line, 7).unwrap_err();
        assert_eq!(err.line, 7);
        assert_eq!(err.reason, "missing required field author_id");
    }

    #[test]
    fn retweet_fields_populate_is_retweet() {
        let line = r#"{"tweet_id":"1","author_id":"u1","timestamp":100,"text":"rt","retweeted_tweet_id":"123","retweeted_author_id":"u9"}"#;
        let event = parse_event_line(line, 1).unwrap();
        assert!(event.is_retweet);
        assert_eq!(event.retweeted_tweet_id.as_deref(), Some("123"));
        assert_eq!(event.retweeted_author_id.as_deref(), Some("u9"));
    }

    #[test]
    fn rfc3339_timestamps_are_accepted() {
        let line = r#"{"tweet_id":"1","author_id":"u1","timestamp":"2019-01-01T00:00:00Z","text":"x"}"#;
        let event = parse_event_line(line, 1).unwrap();
        assert_eq!(event.timestamp, 1_546_300_800);
    }

    #[test]
    fn negative_timestamps_are_rejected() {
        let line = r#"{"tweet_id":"1","author_id":"u1","timestamp":-5,"text":"x"}"#;
        let err = parse_event_line(line, 1).unwrap_err();
        assert!(err.reason.contains("epoch"));
    }

    #[test]
    fn strict_mode_aborts_lenient_skips() {
        let input = "{\"tweet_id\":\"1\",\"author_id\":\"u\",\"timestamp\":1,\"text\":\"a\"}\nnot json\n";
        let out = parse_events(input.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].line, 2);
        assert!(parse_events(input.as_bytes(), ParseMode::Strict).is_err());
    }

    #[test]
    fn partition_splits_at_utc_midnight() {
        let events = vec![
            event("a", "u1", 1_546_387_199), // 2019-01-01T23:59:59Z
            event("b", "u1", 1_546_387_200), // 2019-01-02T00:00:00Z
        ];
        let slices = partition_by_day(events, "c");
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].date, NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        assert_eq!(slices[1].date, NaiveDate::from_ymd_opt(2019, 1, 2).unwrap());
        assert_eq!(slices[0].events.len(), 1);
        assert_eq!(slices[1].events.len(), 1);
    }

    #[test]
    fn partition_of_empty_input_is_empty() {
        assert!(partition_by_day(vec![], "c").is_empty());
    }

    #[test]
    fn slice_order_breaks_timestamp_ties_by_tweet_id() {
        // Hand-applied sort rule: (2,"c") then (5,"a") then (5,"b").
        let events = vec![event("b", "u", 5), event("a", "u", 5), event("c", "u", 2)];
        let slices = partition_by_day(events, "c");
        assert_eq!(slices.len(), 1);
        let order: Vec<(i64, &str)> = slices[0]
            .events
            .iter()
            .map(|e| (e.timestamp, e.tweet_id.as_str()))
            .collect();
        assert_eq!(order, vec![(2, "c"), (5, "a"), (5, "b")]);
    }

    fn entity_strategy() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec("[a-z0-9_]{1,8}", 0..4)
    }

    fn event_strategy() -> impl Strategy<Value = TweetEvent> {
        (
            "[a-zA-Z0-9]{1,12}",
            "[a-z0-9_]{1,10}",
            0i64..4_000_000_000,
            ".{0,40}",
            entity_strategy(),
            entity_strategy(),
            proptest::collection::vec("[a-zA-Z0-9:/._-]{1,20}", 0..3),
            proptest::option::of("[0-9]{1,8}"),
            proptest::option::of("[a-z0-9_]{1,8}"),
        )
            .prop_map(
                |(tweet_id, author_id, timestamp, text, hashtags, mentions, urls, rt, ra)| {
                    TweetEvent {
                        tweet_id,
                        author_id,
                        timestamp,
                        text,
                        hashtags,
                        mentions,
                        urls,
                        is_retweet: rt.is_some(),
                        retweeted_tweet_id: rt,
                        retweeted_author_id: ra,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn json_line_round_trip(event in event_strategy()) {
            let line = event.to_json_line();
            let parsed = parse_event_line(&line, 1).unwrap();
            prop_assert_eq!(parsed, event);
        }

        #[test]
        fn partition_preserves_events(events in proptest::collection::vec(event_strategy(), 0..40)) {
            let slices = partition_by_day(events.clone(), "c");
            let mut expected: Vec<String> = events.iter().map(|e| e.to_json_line()).collect();
            let mut got: Vec<String> = slices
                .iter()
                .flat_map(|s| s.events.iter().map(|e| e.to_json_line()))
                .collect();
            expected.sort();
            got.sort();
            prop_assert_eq!(got, expected);
            for slice in &slices {
                for event in &slice.events {
                    prop_assert_eq!(event.date(), slice.date);
                }
            }
            // Deterministic: re-partitioning a shuffled copy yields the same slices.
            let mut shuffled = events;
            shuffled.reverse();
            prop_assert_eq!(partition_by_day(shuffled, "c"), slices);
        }
    }
}
