//! Per-pattern daily activity series, and how a one-day event reads as a
//! coordination spike.
//!
//! Scenario E's base-d community is legitimate background noise except for
//! one scripted day on which many accounts post the same hashtag. The
//! co-hashtag node-count series is flat at zero apart from that single day,
//! which is exactly what makes event days a false-positive hazard.
//!
//! Run with: cargo run --release --example activity_report

use std::collections::BTreeSet;

use coordnet::ingest::partition_by_day;
use coordnet::netbuild::{build_all, CoRetweetKey, PatternKind};
use coordnet::netstats::activity_series;
use coordnet::synthgen::{generate, scenario};

fn main() {
    let config = scenario("E").expect("library scenario");
    let corpus = generate(&config).expect("valid config");
    let community = corpus.community("base-d").expect("community exists");

    let members: BTreeSet<String> = community
        .events
        .iter()
        .map(|e| e.author_id.clone())
        .collect();
    let slices = partition_by_day(community.events.clone(), &community.community_id);
    let mut networks = Vec::new();
    for slice in &slices {
        let built = build_all(slice, 60, &members, CoRetweetKey::default());
        networks.extend(built.into_values());
    }
    let series = activity_series(&networks);

    let co_hashtag = &series[&PatternKind::CoHashtag];
    let spikes: Vec<_> = co_hashtag.iter().filter(|(_, &n)| n > 0).collect();
    println!(
        "base-d co_hashtag series: {} days tracked, {} day(s) with coordinating accounts",
        co_hashtag.len(),
        spikes.len()
    );
    for (date, nodes) in &spikes {
        println!("  {date}: {nodes} accounts coordinated");
        let expected = &corpus.manifest.expected["base-d"][date][&PatternKind::CoHashtag];
        println!("  manifest scripted {} participants that day", expected.len());
    }

    println!("\naccounts coordinating per day around the event:");
    let event_day = *spikes[0].0;
    for (date, nodes) in co_hashtag.range(event_day - chrono::Days::new(3)..) {
        let bar = "#".repeat(*nodes as usize);
        println!("  {date} {nodes:>3} {bar}");
        if *date >= event_day + chrono::Days::new(3) {
            break;
        }
    }
}
