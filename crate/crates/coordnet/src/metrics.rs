//! Precision/recall/F1, normal-approximation confidence intervals, ROC and
//! precision-recall curves, and misclassified-day histograms.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::netstats::Label;

/// Binary confusion counts with SIO as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_positive(), predicted.is_positive()) {
            (true, true) => self.true_pos += 1,
            (false, true) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
            (true, false) => self.false_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

/// Precision, recall and F1.
///
/// Degenerate cases follow a fixed convention because zero-positive days are
/// routine: with no predicted positives, precision is 1 if there were also no
/// actual positives and 0 otherwise; recall is symmetric; F1 is 0 when
/// P + R = 0.
pub fn prf(c: &Confusion) -> (f64, f64, f64) {
    let predicted_pos = c.true_pos + c.false_pos;
    let actual_pos = c.true_pos + c.false_neg;
    let precision = if predicted_pos > 0 {
        c.true_pos as f64 / predicted_pos as f64
    } else if actual_pos == 0 {
        1.0
    } else {
        0.0
    };
    let recall = if actual_pos > 0 {
        c.true_pos as f64 / actual_pos as f64
    } else if predicted_pos == 0 {
        1.0
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Mean and 95% confidence interval: mean ± 1.96 · s/√n with the sample
/// standard deviation (n − 1 denominator). A single value yields a zero-width
/// interval.
pub fn confidence_interval(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "confidence interval needs at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let half_width = 1.96 * var.sqrt() / n.sqrt();
    (mean, mean - half_width, mean + half_width)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Sweep thresholds over the distinct score values (descending; an item is
/// predicted positive when its score >= threshold) and report ROC points
/// (FPR, TPR) and P-R points (R, P). The ROC curve always includes the (0,0)
/// and (1,1) endpoints.
pub fn curves(scored: &[(f64, Label)]) -> (Vec<RocPoint>, Vec<PrPoint>) {
    let mut sorted: Vec<(f64, Label)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = sorted.iter().filter(|(_, l)| l.is_positive()).count() as u64;
    let negatives = sorted.len() as u64 - positives;

    let mut roc = Vec::new();
    let mut pr = Vec::new();
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1.is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let confusion = Confusion {
            true_pos: tp,
            false_pos: fp,
            true_neg: negatives - fp,
            false_neg: positives - tp,
        };
        let (precision, recall, _) = prf(&confusion);
        roc.push(RocPoint {
            threshold,
            fpr: rate(fp, negatives),
            tpr: rate(tp, positives),
        });
        pr.push(PrPoint {
            threshold,
            recall,
            precision,
        });
    }

    if roc.first().map_or(true, |p| p.fpr != 0.0 || p.tpr != 0.0) {
        roc.insert(
            0,
            RocPoint {
                threshold: f64::INFINITY,
                fpr: 0.0,
                tpr: 0.0,
            },
        );
    }
    if roc.last().map_or(true, |p| p.fpr != 1.0 || p.tpr != 1.0) {
        roc.push(RocPoint {
            threshold: f64::NEG_INFINITY,
            fpr: 1.0,
            tpr: 1.0,
        });
    }
    (roc, pr)
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One held-out prediction, as emitted by the experiment harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub run_id: String,
    pub date: NaiveDate,
    pub community_id: String,
    /// Oversampling replica index; 0 for the original stream.
    pub replica: usize,
    pub true_label: Label,
    pub predicted_label: Label,
    pub score: f64,
}

impl PredictionRow {
    pub fn is_error(&self) -> bool {
        self.true_label != self.predicted_label
    }
}

/// Count, per date, the predictions that were misclassified. With
/// `only_true_label = Some(Label::NonSio)` the histogram is restricted to
/// false positives (legitimate activity flagged as SIO).
pub fn error_histogram<'a>(
    rows: impl IntoIterator<Item = &'a PredictionRow>,
    only_true_label: Option<Label>,
) -> BTreeMap<NaiveDate, u64> {
    let mut histogram = BTreeMap::new();
    for row in rows {
        if !row.is_error() {
            continue;
        }
        if let Some(filter) = only_true_label {
            if row.true_label != filter {
                continue;
            }
        }
        *histogram.entry(row.date).or_insert(0) += 1;
    }
    histogram
}

/// Mean and 95% CI of one metric across runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCi {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MetricCi {
    pub fn from_values(values: &[f64]) -> Self {
        let (mean, ci_low, ci_high) = confidence_interval(values);
        Self { mean, ci_low, ci_high }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub f1: MetricCi,
    pub precision: MetricCi,
    pub recall: MetricCi,
    pub n_runs: usize,
}

impl MetricSummary {
    pub fn from_runs(f1s: &[f64], precisions: &[f64], recalls: &[f64]) -> Self {
        debug_assert_eq!(f1s.len(), precisions.len());
        debug_assert_eq!(f1s.len(), recalls.len());
        Self {
            f1: MetricCi::from_values(f1s),
            precision: MetricCi::from_values(precisions),
            recall: MetricCi::from_values(recalls),
            n_runs: f1s.len(),
        }
    }
}

/// Write curve points as `threshold,x,y` CSV (ROC: x=FPR, y=TPR; P-R: x=R,
/// y=P).
pub fn write_curve_csv<W: Write>(
    mut w: W,
    points: impl IntoIterator<Item = (f64, f64, f64)>,
) -> std::io::Result<()> {
    writeln!(w, "threshold,x,y")?;
    for (threshold, x, y) in points {
        writeln!(w, "{threshold},{x},{y}")?;
    }
    Ok(())
}
