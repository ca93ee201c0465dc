//! Build the six coordination networks for one day of hand-written activity.
//!
//! Shows the pattern rules directly: the inclusive time threshold for the
//! five timed patterns, the membership gate and threshold exemption for
//! retweets, and url-stripped text matching for co-tweets.
//!
//! Run with: cargo run --release --example build_networks

use std::collections::BTreeSet;
use std::io;

use coordnet::ingest::{partition_by_day, TweetEvent};
use coordnet::netbuild::{build_all, CoRetweetKey};

fn tweet(id: &str, author: &str, secs: i64, text: &str) -> TweetEvent {
    TweetEvent {
        tweet_id: id.to_string(),
        author_id: author.to_string(),
        timestamp: 1_546_300_800 + secs, // 2019-01-01, seconds after midnight
        text: text.to_string(),
        hashtags: vec![],
        mentions: vec![],
        urls: vec![],
        is_retweet: false,
        retweeted_tweet_id: None,
        retweeted_author_id: None,
    }
}

fn main() {
    let mut events = Vec::new();

    // Same hashtag: alice-bob within 60s, carol too late for alice.
    for (id, author, secs) in [("h1", "alice", 0), ("h2", "bob", 30), ("h3", "carol", 90)] {
        let mut e = tweet(id, author, secs, &format!("rally #VoteNow {id}"));
        e.hashtags = vec!["votenow".to_string()];
        events.push(e);
    }

    // Identical text once the url is stripped.
    let mut with_url = tweet("t1", "dave", 200, "Vote now! https://t.co/xyz");
    with_url.urls = vec!["https://t.co/xyz".to_string()];
    events.push(with_url);
    events.push(tweet("t2", "erin", 230, "Vote now!"));

    // A retweet of a community member, plus one of an outsider.
    let mut rt = tweet("r1", "frank", 300, "RT t2");
    rt.is_retweet = true;
    rt.retweeted_tweet_id = Some("t2".to_string());
    rt.retweeted_author_id = Some("erin".to_string());
    events.push(rt);
    let mut rt_out = tweet("r2", "grace", 320, "RT news");
    rt_out.is_retweet = true;
    rt_out.retweeted_tweet_id = Some("x9".to_string());
    rt_out.retweeted_author_id = Some("outsider".to_string());
    events.push(rt_out);

    // A shortened url shared twice, matched verbatim.
    for (id, author, secs) in [("u1", "alice", 400), ("u2", "erin", 440)] {
        let mut e = tweet(id, author, secs, &format!("look at this {id}"));
        e.urls = vec!["bit.ly/abc".to_string()];
        events.push(e);
    }

    let members: BTreeSet<String> = events.iter().map(|e| e.author_id.clone()).collect();
    let slices = partition_by_day(events, "demo");
    let slice = &slices[0];

    println!("community demo, {} events on {}\n", slice.events.len(), slice.date);
    let networks = build_all(slice, 60, &members, CoRetweetKey::default());
    for (pattern, network) in &networks {
        println!(
            "{pattern}: {} nodes, {} edges",
            network.node_count(),
            network.edge_count()
        );
        network
            .write_dump(io::stdout().lock(), 60)
            .expect("stdout write");
        println!();
    }
}
