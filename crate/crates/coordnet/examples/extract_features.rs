//! Turn a community's event stream into 42-dimensional feature vectors.
//!
//! Seven statistics per network (nodes, edges, largest/mean/std component
//! size, mean/std degree) concatenated over the six patterns in canonical
//! order, at daily and weekly aggregation.
//!
//! Run with: cargo run --release --example extract_features

use coordnet::harness::CommunityCorpus;
use coordnet::netbuild::CoRetweetKey;
use coordnet::netstats::{feature_names, write_feature_csv, Aggregation};
use coordnet::synthgen::{generate, scenario};

fn main() {
    let config = scenario("A").expect("library scenario");
    let generated = generate(&config).expect("valid config");
    let corpus =
        CommunityCorpus::from_generated(&generated, CoRetweetKey::default()).expect("corpus");

    let stream = corpus.get("sio-a").expect("community exists");
    let daily = stream.feature_vectors(Aggregation::Daily);
    let weekly = stream.feature_vectors(Aggregation::Weekly);
    println!(
        "sio-a: {} daily rows, {} weekly rows over {}..{}\n",
        daily.len(),
        weekly.len(),
        stream.first,
        stream.last
    );

    let names = feature_names();
    let first = &daily[0];
    println!("first daily vector ({}), nonzero dimensions:", first.date);
    for (name, value) in names.iter().zip(&first.values) {
        if *value != 0.0 {
            println!("  {name:<22} {value}");
        }
    }

    // The weekly vector for the same date unions seven days of edges, so its
    // counts dominate the daily ones.
    let week = weekly.iter().find(|v| v.date == first.date + chrono::Days::new(6));
    if let Some(week) = week {
        println!("\nweekly vector dated {} (window of 7 days):", week.date);
        for (name, value) in names.iter().zip(&week.values) {
            if *value != 0.0 {
                println!("  {name:<22} {value}");
            }
        }
    }

    let mut csv = Vec::new();
    write_feature_csv(&mut csv, &daily[..3.min(daily.len())]).expect("csv");
    println!("\nfeature CSV preview:");
    for line in String::from_utf8(csv).unwrap().lines() {
        let head: String = line.chars().take(100).collect();
        println!("  {head}...");
    }
}
