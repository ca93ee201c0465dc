//! coordnet classifies the daily or weekly coordinated activity of an online
//! community as SIO-like (disinformation-campaign-like) or legitimate.
//!
//! The pipeline: parse tweet events ([`ingest`]), build six kinds of
//! coordination networks per day ([`netbuild`]), extract seven structural
//! statistics per network into 42-dimensional feature vectors ([`netstats`]),
//! train a seeded random forest ([`forest`]) and evaluate it under two
//! sliding-window protocols ([`harness`]): time series prediction on known
//! campaigns (Task 1) and cross-campaign generalization to unseen sources
//! (Task 2). [`synthgen`] provides labeled synthetic corpora with ground
//! truth manifests, and [`metrics`] the evaluation arithmetic.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release --example simulate_scenario
//! cargo run --release --example build_networks
//! cargo run --release --example extract_features
//! cargo run --release --example oracle_check
//! cargo run --release --example train_forest
//! cargo run --release --example task1_time_series
//! cargo run --release --example task2_generalization
//! cargo run --release --example activity_report
//! ```
//!
//! The same functionality is scriptable through the `coordnet` binary
//! (`simulate`, `build-features`, `train`, `evaluate`, `report`,
//! `oracle-check`).

pub mod cli;
pub mod forest;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod netbuild;
pub mod netstats;
pub mod synthgen;
pub(crate) mod rng;

pub use forest::{ForestModel, TreeNode};
pub use harness::{ClassRatio, CommunityCorpus, ExperimentResult, ExperimentSpec, Task};
pub use ingest::{CommunitySlice, ParseMode, TweetEvent};
pub use metrics::{Confusion, MetricSummary, PredictionRow};
pub use netbuild::{CoRetweetKey, CoordinationNetwork, PatternKind};
pub use netstats::{Aggregation, FeatureVector, Label, NetworkStats, FEATURE_COUNT};
pub use synthgen::{BehaviorSpec, GeneratedCorpus, Manifest, ScenarioConfig};
