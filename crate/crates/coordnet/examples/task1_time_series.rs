//! Task 1: sliding-window time series prediction on known campaigns.
//!
//! For every test day, a fresh forest trains on the previous N days of the
//! 20 sources (campaign pair + oversampled baselines, the 2:18 class ratio)
//! and classifies the held-out day's 20 vectors. Also demonstrates window
//! tuning on a held-out leading date range.
//!
//! Run with: cargo run --release --example task1_time_series

use chrono::NaiveDate;

use coordnet::harness::{
    run_task1, tune_window, ClassRatio, CommunityCorpus, ExperimentSpec, Task,
};
use coordnet::netbuild::CoRetweetKey;
use coordnet::netstats::Aggregation;
use coordnet::synthgen::{generate, scenario};

fn main() {
    let config = scenario("A").expect("library scenario");
    let generated = generate(&config).expect("valid config");
    let corpus =
        CommunityCorpus::from_generated(&generated, CoRetweetKey::default()).expect("corpus");

    let full_range = (
        NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2019, 7, 19).unwrap(),
    );
    let mut spec = ExperimentSpec::new(
        Task::One,
        Aggregation::Daily,
        ClassRatio::TwoToEighteen,
        (NaiveDate::from_ymd_opt(2019, 4, 1).unwrap(), full_range.1),
    );
    spec.seeds = vec![1];
    spec.tuning_range = Some((full_range.0, NaiveDate::from_ymd_opt(2019, 3, 31).unwrap()));

    // Pick N on the tuning range only, then evaluate after it.
    spec.window_n = tune_window(&spec, &corpus, &[1, 7, 30]).expect("tuning data");
    println!("tuned window N = {}", spec.window_n);

    for aggregation in [Aggregation::Daily, Aggregation::Weekly] {
        spec.aggregation = aggregation;
        let result = run_task1(&spec, &corpus).expect("experiment runs");
        let s = &result.summary;
        println!(
            "task 1 {aggregation} {}: F1 {:.3} ({:.3},{:.3})  P {:.3}  R {:.3}  over {} groups, {} predictions",
            spec.ratio,
            s.f1.mean,
            s.f1.ci_low,
            s.f1.ci_high,
            s.precision.mean,
            s.recall.mean,
            result.group_count,
            result.predictions.len()
        );
    }
}
