//! Cross-check the sliding-window pair builder against the brute-force
//! oracle, and demonstrate threshold monotonicity.
//!
//! The builder sweeps a time-sorted window per key; the oracle compares
//! every item pair. They must agree exactly on every input.
//!
//! Run with: cargo run --release --example oracle_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coordnet::netbuild::{oracle_edges, sweep_edges, PatternItem};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let thresholds = [1i64, 60, 300, 600];
    let cases = 100;
    let mut checked = 0u64;

    for case in 0..cases {
        let n_items = rng.random_range(0..1500);
        let n_keys = rng.random_range(1..=20);
        let items: Vec<PatternItem> = (0..n_items)
            .map(|_| {
                PatternItem::new(
                    format!("k{}", rng.random_range(0..n_keys)),
                    format!("a{}", rng.random_range(0..40)),
                    rng.random_range(0..86_400),
                )
            })
            .collect();

        let mut previous = None;
        for threshold in thresholds {
            let swept = sweep_edges(&items, threshold);
            let oracle = oracle_edges(&items, threshold);
            assert_eq!(swept, oracle, "case {case} threshold {threshold}");
            if let Some(smaller) = &previous {
                assert!(
                    swept.is_superset(smaller),
                    "edges must grow with the threshold"
                );
            }
            previous = Some(swept);
            checked += 1;
        }
    }
    println!("{cases} random streams x {} thresholds: {checked} exact matches", thresholds.len());

    // A concrete example: 90s gap exceeds a 60s threshold, so no a--c edge.
    let items = vec![
        PatternItem::new("tag", "a", 0),
        PatternItem::new("tag", "b", 30),
        PatternItem::new("tag", "c", 90),
    ];
    for threshold in [60, 120] {
        let edges = sweep_edges(&items, threshold);
        let rendered: Vec<String> =
            edges.iter().map(|(x, y)| format!("{x}--{y}")).collect();
        println!("threshold {threshold:>3}s: {}", rendered.join(", "));
    }
}
