use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::Label;

/// Binary classification metrics with the positive class as "positive".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Predicts positive when `score >= threshold`.
pub fn eval_metrics(scores: &[f64], labels: &[Label], threshold: f64) -> Result<EvalMetrics, StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&score, &label) in scores.iter().zip(labels) {
        match (score >= threshold, label) {
            (true, Label::Positive) => tp += 1,
            (true, Label::Negative) => fp += 1,
            (false, Label::Negative) => tn += 1,
            (false, Label::Positive) => fn_ += 1,
        }
    }
    let mut undefined = Vec::new();
    let mut or_zero = |name: &str, value: Option<f64>| {
        value.unwrap_or_else(|| {
            undefined.push(name.to_string());
            0.0
        })
    };
    let accuracy = (tp + tn) as f64 / scores.len() as f64;
    let precision = or_zero("precision", ratio(tp, tp + fp));
    let recall = or_zero("recall", ratio(tp, tp + fn_));
    let f1_value = if precision + recall > 0.0 {
        Some(2.0 * precision * recall / (precision + recall))
    } else {
        None
    };
    let f1 = or_zero("f1", f1_value);
    Ok(EvalMetrics {
        accuracy,
        precision,
        recall,
        f1,
        tp,
        fp,
        tn,
        fn_,
        undefined,
    })
}
