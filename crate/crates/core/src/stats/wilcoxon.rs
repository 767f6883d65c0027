//! Wilcoxon signed-rank test on paired scores.
//!
//! Absolute differences are ranked with mid-ranks for ties. The exact null
//! distribution of `W+` is the distribution over all `2^n` sign assignments;
//! it is computed by convolving one rank at a time, using doubled ranks so
//! that mid-ranks stay integral. Larger samples use the normal approximation
//! with the tie-corrected variance `sum(r^2) / 4` and a 0.5 continuity
//! correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Treatment of zero differences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    /// Drop zeros before ranking.
    #[default]
    Discard,
    /// Rank zeros with the rest, then leave their ranks out of `W+` and `W-`.
    Pratt,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMethod {
    /// Exact up to `exact_max_n` non-zero differences, normal above.
    #[default]
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub zero_policy: ZeroPolicy,
    pub method: TestMethod,
    pub exact_max_n: usize,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self {
            zero_policy: ZeroPolicy::Discard,
            method: TestMethod::Auto,
            exact_max_n: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences entering the sums.
    pub n: usize,
    pub n_zero: usize,
    pub p_value: f64,
    /// Exact or Normal; never Auto.
    pub method: TestMethod,
}

/// Two-sided test of `score_male - score_female` for `(male, female)` pairs.
pub fn wilcoxon_signed_rank(
    pairs: &[(f64, f64)],
    options: WilcoxonOptions,
) -> Result<WilcoxonResult, StatsError> {
    let deltas: Vec<f64> = pairs.iter().map(|(m, f)| m - f).collect();
    wilcoxon_deltas(&deltas, options)
}

/// Mid-ranks (1-based) of `values`, doubled so they are integers.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j; their mean doubled is i+1+j
        let doubled = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = doubled;
        }
        i = j;
    }
    ranks
}

/// Probability of each doubled `W+` value over all sign assignments.
fn exact_distribution(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let p = dist[s] * 0.5;
            dist[s] = p;
            dist[s + r] += p;
        }
        reach += r;
    }
    dist
}

pub fn wilcoxon_deltas(deltas: &[f64], options: WilcoxonOptions) -> Result<WilcoxonResult, StatsError> {
    if deltas.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n_zero = deltas.iter().filter(|d| **d == 0.0).count();
    let n = deltas.len() - n_zero;
    if n == 0 {
        return Err(StatsError::NoNonzeroDifferences);
    }

    let ranked: Vec<f64> = match options.zero_policy {
        ZeroPolicy::Discard => deltas.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroPolicy::Pratt => deltas.to_vec(),
    };
    let abs: Vec<f64> = ranked.iter().map(|d| d.abs()).collect();
    let all_ranks = doubled_midranks(&abs);

    let mut ranks = Vec::with_capacity(n);
    let mut t_plus = 0u64;
    let mut t_minus = 0u64;
    for (d, r) in ranked.iter().zip(&all_ranks) {
        if *d > 0.0 {
            t_plus += r;
            ranks.push(*r);
        } else if *d < 0.0 {
            t_minus += r;
            ranks.push(*r);
        }
    }
    let total = t_plus + t_minus;

    let method = match options.method {
        TestMethod::Auto if n <= options.exact_max_n => TestMethod::Exact,
        TestMethod::Auto => TestMethod::Normal,
        m => m,
    };

    let p_value = match method {
        TestMethod::Exact => {
            let dist = exact_distribution(&ranks);
            let t = t_plus as usize;
            let lower: f64 = dist[..=t].iter().sum();
            let upper: f64 = dist[t..].iter().sum();
            (2.0 * lower.min(upper)).min(1.0)
        }
        _ => {
            // Halve the doubled ranks back.
            let mean = total as f64 / 4.0;
            let var: f64 = ranks.iter().map(|&r| (r * r) as f64).sum::<f64>() / 16.0;
            let w = t_plus as f64 / 2.0;
            if var == 0.0 {
                1.0
            } else {
                let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
                let normal = Normal::standard();
                (2.0 * normal.sf(z)).min(1.0)
            }
        }
    };

    let w_plus = t_plus as f64 / 2.0;
    let w_minus = t_minus as f64 / 2.0;
    Ok(WilcoxonResult {
        statistic: w_plus.min(w_minus),
        w_plus,
        w_minus,
        n,
        n_zero,
        p_value,
        method,
    })
}
