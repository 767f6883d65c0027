//! Bias measures and the statistics used to test them.

mod aggregate;
mod correlation;
mod metrics;
mod significance;
mod wilcoxon;

pub use aggregate::{aggregate, sample_bias, summarize_deltas, BiasReport, DeltaSummary, SampleBias};
pub use correlation::{correlation_matrix, pearson, CorrelationCell, CorrelationMatrix};
pub use metrics::{eval_metrics, EvalMetrics};
pub use significance::{bonferroni, stars, stars_label};
pub use wilcoxon::{
    wilcoxon_deltas, wilcoxon_signed_rank, TestMethod, WilcoxonOptions, WilcoxonResult, ZeroPolicy,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("zero variance in `{0}`")]
    ZeroVariance(String),
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("p-value {0} is outside [0, 1]")]
    InvalidP(f64),
    #[error("number of tests must be at least 1")]
    InvalidTestCount,
    #[error("all differences are zero; the signed-rank test is undefined")]
    NoNonzeroDifferences,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
