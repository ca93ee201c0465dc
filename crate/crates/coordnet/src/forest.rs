//! A from-scratch random-forest binary classifier.
//!
//! Trees are grown on bootstrap samples with Gini splits over a random
//! subset of floor(sqrt(d)) candidate features per node, to unlimited depth.
//! Every source of randomness derives from (seed, tree index), so training is
//! reproducible and may run tree-parallel without changing the result.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netstats::Label;
use crate::rng::{derive_rng, derive_seed, sample_indices};

pub const DEFAULT_TREES: usize = 100;
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A decision-tree node: an internal split or a leaf holding the class
/// counts of the training samples that reached it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature_index: usize,
        split_threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        positive_count: u64,
        negative_count: u64,
    },
}

impl TreeNode {
    /// Majority vote of the leaf this input falls into; leaf ties vote
    /// negative.
    fn vote(&self, x: &[f64]) -> bool {
        match self {
            TreeNode::Split {
                feature_index,
                split_threshold,
                left,
                right,
            } => {
                if x[*feature_index] <= *split_threshold {
                    left.vote(x)
                } else {
                    right.vote(x)
                }
            }
            TreeNode::Leaf {
                positive_count,
                negative_count,
            } => positive_count > negative_count,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub positive_rows: usize,
    pub negative_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub seed: u64,
    pub n_trees: usize,
    pub feature_count: usize,
    pub training_meta: TrainingMeta,
    pub trees: Vec<TreeNode>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("no training data")]
    NoTrainingData,
    #[error("row {row} has {got} features, expected {expected}")]
    FeatureCountMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("labels and rows differ in length: {labels} vs {rows}")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("row {row} contains a non-finite value")]
    NonFiniteValue { row: usize },
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    Version(u32),
}

fn gini(pos: u64, neg: u64) -> f64 {
    let total = pos + neg;
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    let q = neg as f64 / total as f64;
    1.0 - p * p - q * q
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    positive: &'a [bool],
    feature_count: usize,
    candidates_per_node: usize,
}

impl TreeBuilder<'_> {
    fn grow(&self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> TreeNode {
        let positive_count = samples.iter().filter(|&&i| self.positive[i]).count() as u64;
        let negative_count = samples.len() as u64 - positive_count;
        if positive_count == 0 || negative_count == 0 || samples.len() < 2 {
            return TreeNode::Leaf {
                positive_count,
                negative_count,
            };
        }
        let Some((feature_index, split_threshold)) = self.best_split(&samples, rng) else {
            // Every candidate feature is constant across the node's samples.
            return TreeNode::Leaf {
                positive_count,
                negative_count,
            };
        };
        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.x[i][feature_index] <= split_threshold);
        let left = Box::new(self.grow(left_samples, rng));
        let right = Box::new(self.grow(right_samples, rng));
        TreeNode::Split {
            feature_index,
            split_threshold,
            left,
            right,
        }
    }

    /// Minimum weighted Gini impurity over the node's candidate features,
    /// with thresholds at midpoints of consecutive distinct values.
    fn best_split(&self, samples: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let candidates = sample_indices(rng, self.feature_count, self.candidates_per_node);
        let n = samples.len() as f64;
        let total_pos = samples.iter().filter(|&&i| self.positive[i]).count() as u64;
        let total_neg = samples.len() as u64 - total_pos;

        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(samples.len());
        for feature in candidates {
            column.clear();
            column.extend(
                samples
                    .iter()
                    .map(|&i| (self.x[i][feature], self.positive[i])),
            );
            column.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_pos = 0u64;
            let mut left_neg = 0u64;
            for i in 0..column.len() - 1 {
                if column[i].1 {
                    left_pos += 1;
                } else {
                    left_neg += 1;
                }
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let right_pos = total_pos - left_pos;
                let right_neg = total_neg - left_neg;
                let n_left = (left_pos + left_neg) as f64;
                let n_right = (right_pos + right_neg) as f64;
                let weighted = (n_left * gini(left_pos, left_neg)
                    + n_right * gini(right_pos, right_neg))
                    / n;
                if best.map_or(true, |(score, _, _)| weighted < score) {
                    let threshold = column[i].0 + (column[i + 1].0 - column[i].0) / 2.0;
                    best = Some((weighted, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

impl ForestModel {
    /// Train `n_trees` trees on bootstrap samples of the rows.
    ///
    /// Single-class inputs are allowed and yield constant-prediction leaves.
    pub fn train(
        x: &[Vec<f64>],
        y: &[Label],
        n_trees: usize,
        seed: u64,
    ) -> Result<Self, TrainError> {
        if x.is_empty() {
            return Err(TrainError::NoTrainingData);
        }
        if x.len() != y.len() {
            return Err(TrainError::LabelCountMismatch {
                labels: y.len(),
                rows: x.len(),
            });
        }
        let feature_count = x[0].len();
        for (row, values) in x.iter().enumerate() {
            if values.len() != feature_count {
                return Err(TrainError::FeatureCountMismatch {
                    row,
                    got: values.len(),
                    expected: feature_count,
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(TrainError::NonFiniteValue { row });
            }
        }

        let positive: Vec<bool> = y.iter().map(|l| l.is_positive()).collect();
        let builder = TreeBuilder {
            x,
            positive: &positive,
            feature_count,
            candidates_per_node: (feature_count as f64).sqrt().floor().max(1.0) as usize,
        };
        let n = x.len();
        let trees: Vec<TreeNode> = (0..n_trees as u64)
            .into_par_iter()
            .map(|tree_index| {
                let mut rng = derive_rng(seed, &[0x7265, tree_index]);
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                builder.grow(bootstrap, &mut rng)
            })
            .collect();

        let positive_rows = positive.iter().filter(|&&p| p).count();
        Ok(ForestModel {
            version: MODEL_FORMAT_VERSION,
            seed,
            n_trees,
            feature_count,
            training_meta: TrainingMeta {
                positive_rows,
                negative_rows: n - positive_rows,
            },
            trees,
        })
    }

    /// Fraction of trees voting SIO.
    pub fn predict_score(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.feature_count, "feature count mismatch");
        debug_assert!(x.iter().all(|v| v.is_finite()));
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        votes as f64 / self.trees.len().max(1) as f64
    }

    /// Majority vote: SIO iff strictly more than half the trees vote SIO;
    /// an exact tie is non-SIO.
    pub fn predict(&self, x: &[f64]) -> (Label, f64) {
        let score = self.predict_score(x);
        let label = if score > 0.5 { Label::Sio } else { Label::NonSio };
        (label, score)
    }

    /// Mean decrease in Gini impurity per feature, weighted by node sample
    /// counts, averaged over trees and normalized to sum 1. If no tree ever
    /// split (all-zero decrease), the importance is uniform.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.feature_count];
        let mut per_tree = vec![0.0; self.feature_count];
        for tree in &self.trees {
            per_tree.iter_mut().for_each(|v| *v = 0.0);
            let (root_samples, _) = Self::accumulate_importance(tree, &mut per_tree);
            if root_samples > 0 {
                for (total, raw) in totals.iter_mut().zip(&per_tree) {
                    *total += raw / root_samples as f64;
                }
            }
        }
        let sum: f64 = totals.iter().sum();
        if sum <= 0.0 {
            let uniform = 1.0 / self.feature_count as f64;
            return vec![uniform; self.feature_count];
        }
        totals.iter().map(|v| v / sum).collect()
    }

    /// Post-order walk returning (samples, positives) under the node and
    /// adding each split's sample-weighted impurity decrease to `acc`.
    fn accumulate_importance(node: &TreeNode, acc: &mut [f64]) -> (u64, u64) {
        match node {
            TreeNode::Leaf {
                positive_count,
                negative_count,
            } => (positive_count + negative_count, *positive_count),
            TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } => {
                let (n_left, pos_left) = Self::accumulate_importance(left, acc);
                let (n_right, pos_right) = Self::accumulate_importance(right, acc);
                let n_total = n_left + n_right;
                let pos_total = pos_left + pos_right;
                let decrease = n_total as f64 * gini(pos_total, n_total - pos_total)
                    - n_left as f64 * gini(pos_left, n_left - pos_left)
                    - n_right as f64 * gini(pos_right, n_right - pos_right);
                acc[*feature_index] += decrease;
                (n_total, pos_total)
            }
        }
    }

    /// Serialize as a versioned JSON document. Re-loading reproduces
    /// bit-identical predictions.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelIoError> {
        let model: ForestModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(ModelIoError::Version(model.version));
        }
        Ok(model)
    }

    /// Deterministic per-unit training seed for harness work items.
    pub fn derive_training_seed(seed: u64, stream: &[u64]) -> u64 {
        derive_seed(seed, stream)
    }

    /// Features that appear in at least one split.
    pub fn used_features(&self) -> HashSet<usize> {
        fn walk(node: &TreeNode, used: &mut HashSet<usize>) {
            if let TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } = node
            {
                used.insert(*feature_index);
                walk(left, used);
                walk(right, used);
            }
        }
        let mut used = HashSet::new();
        for tree in &self.trees {
            walk(tree, &mut used);
        }
        used
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netstats::FEATURE_COUNT;
    use crate::rng::derive_rng;
    use rand::Rng;

    fn separable_rows(
        n_pos: usize,
        n_neg: usize,
        seed: u64,
    ) -> (Vec<Vec<f64>>, Vec<Label>) {
        // Positives have co_tweet_nodes (index 7) in [20, 40]; negatives at 0.
        // The other 41 dimensions are noise.
        let mut rng = derive_rng(seed, &[0xda7a]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n_pos + n_neg {
            let positive = i < n_pos;
            let mut row: Vec<f64> = (0..FEATURE_COUNT)
                .map(|_| rng.random_range(0.0..5.0))
                .collect();
            row[7] = if positive {
                rng.random_range(20.0..40.0)
            } else {
                0.0
            };
            x.push(row);
            y.push(if positive { Label::Sio } else { Label::NonSio });
        }
        (x, y)
    }

    #[test]
    fn single_row_training_predicts_its_own_label() {
        let x = vec![vec![1.0; FEATURE_COUNT]];
        let model = ForestModel::train(&x, &[Label::Sio], 10, 3).unwrap();
        let (label, score) = model.predict(&x[0]);
        assert_eq!(label, Label::Sio);
        assert_eq!(score, 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = separable_rows(40, 60, 1);
        let a = ForestModel::train(&x, &y, 25, 42).unwrap();
        let b = ForestModel::train(&x, &y, 25, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let (probe, _) = separable_rows(10, 10, 9);
        for row in &probe {
            assert_eq!(a.predict(row), b.predict(row));
        }
        let c = ForestModel::train(&x, &y, 25, 43).unwrap();
        assert!(probe.iter().any(|r| a.predict_score(r) != c.predict_score(r)) || a != c);
    }

    #[test]
    fn separable_data_is_learned() {
        let (x, y) = separable_rows(80, 320, 5);
        let model = ForestModel::train(&x, &y, 50, 7).unwrap();
        let (hx, hy) = separable_rows(20, 80, 6);
        let correct = hx
            .iter()
            .zip(&hy)
            .filter(|(row, want)| model.predict(row).0 == **want)
            .count();
        assert!(correct as f64 / hx.len() as f64 >= 0.95);
        // The synthetic separator lives in the co_tweet block (indices 7..14).
        let importance = model.feature_importance();
        let argmax = importance
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((7..14).contains(&argmax), "argmax importance was {argmax}");
    }

    #[test]
    fn importance_sums_to_one() {
        let (x, y) = separable_rows(30, 70, 2);
        let model = ForestModel::train(&x, &y, 20, 11).unwrap();
        let sum: f64 = model.feature_importance().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stump_forest_attributes_all_importance_to_its_feature() {
        let model = ForestModel {
            version: MODEL_FORMAT_VERSION,
            seed: 0,
            n_trees: 1,
            feature_count: FEATURE_COUNT,
            training_meta: TrainingMeta::default(),
            trees: vec![TreeNode::Split {
                feature_index: 7,
                split_threshold: 0.5,
                left: Box::new(TreeNode::Leaf {
                    positive_count: 0,
                    negative_count: 5,
                }),
                right: Box::new(TreeNode::Leaf {
                    positive_count: 5,
                    negative_count: 0,
                }),
            }],
        };
        let importance = model.feature_importance();
        assert_eq!(importance[7], 1.0);
        assert!(importance.iter().enumerate().all(|(i, &v)| i == 7 || v == 0.0));
    }

    #[test]
    fn constant_labels_yield_uniform_importance() {
        let x = vec![vec![1.0; FEATURE_COUNT]; 8];
        let y = vec![Label::NonSio; 8];
        let model = ForestModel::train(&x, &y, 5, 1).unwrap();
        let importance = model.feature_importance();
        assert!(importance.iter().all(|&v| (v - 1.0 / FEATURE_COUNT as f64).abs() < 1e-12));
    }

    #[test]
    fn ties_vote_negative() {
        let leaf = |pos, neg| TreeNode::Leaf {
            positive_count: pos,
            negative_count: neg,
        };
        let model = ForestModel {
            version: MODEL_FORMAT_VERSION,
            seed: 0,
            n_trees: 2,
            feature_count: 1,
            training_meta: TrainingMeta::default(),
            trees: vec![leaf(3, 1), leaf(1, 3)],
        };
        let (label, score) = model.predict(&[0.0]);
        assert_eq!(score, 0.5);
        assert_eq!(label, Label::NonSio);

        // A leaf with equal class counts votes negative too.
        let tied = ForestModel {
            trees: vec![leaf(2, 2)],
            n_trees: 1,
            ..model
        };
        assert_eq!(tied.predict(&[0.0]).0, Label::NonSio);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let err = ForestModel::train(&[], &[], 10, 1).unwrap_err();
        assert_eq!(err, TrainError::NoTrainingData);
        assert_eq!(err.to_string(), "no training data");
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let (x, y) = separable_rows(30, 70, 8);
        let model = ForestModel::train(&x, &y, 15, 4).unwrap();
        let restored = ForestModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, restored);
        let (probe, _) = separable_rows(5, 5, 10);
        for row in &probe {
            let (l1, s1) = model.predict(row);
            let (l2, s2) = restored.predict(row);
            assert_eq!(l1, l2);
            assert_eq!(s1.to_bits(), s2.to_bits());
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let (x, y) = separable_rows(5, 5, 8);
        let mut model = ForestModel::train(&x, &y, 2, 4).unwrap();
        model.version = 99;
        let err = ForestModel::from_json(&model.to_json()).unwrap_err();
        assert!(matches!(err, ModelIoError::Version(99)));
    }

    #[test]
    fn scores_are_vote_fractions() {
        let (x, y) = separable_rows(20, 20, 3);
        let model = ForestModel::train(&x, &y, 7, 2).unwrap();
        for row in &x {
            let score = model.predict_score(row);
            let scaled = score * 7.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_tree_fits_consistent_training_data() {
        // No two rows share features with conflicting labels, so an
        // unlimited-depth tree can reach 100% training accuracy. A single
        // tree trains on a bootstrap sample, so check on sampled rows only.
        let (x, y) = separable_rows(25, 25, 12);
        let model = ForestModel::train(&x, &y, 1, 6).unwrap();
        let mut rng = derive_rng(6, &[0x7265, 0]);
        let sampled: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
        for &i in &sampled {
            assert_eq!(model.predict(&x[i]).0, y[i], "row {i} mispredicted");
        }
    }
}
