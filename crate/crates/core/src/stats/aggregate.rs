use serde::{Deserialize, Serialize};

use super::{compensated_sum, StatsError};

/// Score difference for one sample; positive means the male version scored
/// more positively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBias {
    pub id: String,
    pub score_male: f64,
    pub score_female: f64,
    pub delta: f64,
}

impl SampleBias {
    pub fn new(id: impl Into<String>, score_male: f64, score_female: f64) -> Result<Self, StatsError> {
        Ok(Self {
            id: id.into(),
            score_male,
            score_female,
            delta: sample_bias(score_male, score_female)?,
        })
    }
}

fn check_score(score: f64) -> Result<f64, StatsError> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(StatsError::ScoreOutOfRange(score))
    }
}

/// `score_male - score_female`, both scores in `[0, 1]`.
pub fn sample_bias(score_male: f64, score_female: f64) -> Result<f64, StatsError> {
    Ok(check_score(score_male)? - check_score(score_female)?)
}

/// Means and sign counts over a delta vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub n: usize,
    pub tot_all: f64,
    pub abs_all: f64,
    pub tot_nonzero: f64,
    pub abs_nonzero: f64,
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    /// Sample standard deviation (N - 1); 0 for a single sample.
    pub std: f64,
}

pub fn summarize_deltas(deltas: &[f64]) -> Result<DeltaSummary, StatsError> {
    if deltas.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = deltas.len();
    let (mut n_neg, mut n_zero, mut n_pos) = (0, 0, 0);
    for &d in deltas {
        match d.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => n_neg += 1,
            Some(std::cmp::Ordering::Equal) => n_zero += 1,
            _ => n_pos += 1,
        }
    }
    let sum = compensated_sum(deltas.iter().copied());
    let abs_sum = compensated_sum(deltas.iter().map(|d| d.abs()));
    let nonzero = n - n_zero;
    let mean = sum / n as f64;
    let std = if n > 1 {
        let ss = compensated_sum(deltas.iter().map(|d| (d - mean) * (d - mean)));
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    // Zeros add nothing to either sum, so the non-zero means share numerators.
    let (tot_nonzero, abs_nonzero) = if nonzero == 0 {
        (0.0, 0.0)
    } else {
        (sum / nonzero as f64, abs_sum / nonzero as f64)
    };
    Ok(DeltaSummary {
        n,
        tot_all: mean,
        abs_all: abs_sum / n as f64,
        tot_nonzero,
        abs_nonzero,
        n_neg,
        n_zero,
        n_pos,
        std,
    })
}

/// Aggregate bias of one classifier over all experimental samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n: usize,
    pub tot_all: f64,
    pub abs_all: f64,
    pub tot_nonzero: f64,
    pub abs_nonzero: f64,
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
    pub std: f64,
    pub median_male: f64,
    pub median_female: f64,
    /// Two-sided signed-rank p; `None` when the test is undefined (all zero).
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    /// Number of tests used for the Bonferroni correction.
    pub m_tests: Option<usize>,
    pub stars: u8,
}

impl BiasReport {
    /// Attaches a test result corrected for `m_tests` comparisons.
    pub fn with_significance(mut self, p_value: Option<f64>, m_tests: usize) -> Result<Self, StatsError> {
        self.m_tests = Some(m_tests);
        match p_value {
            Some(p) => {
                let (adjusted, stars) = super::bonferroni(p, m_tests)?;
                self.p_value = Some(p);
                self.p_adjusted = Some(adjusted);
                self.stars = stars;
            }
            None => {
                self.p_value = None;
                self.p_adjusted = None;
                self.stars = 0;
            }
        }
        Ok(self)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Builds the report without significance fields.
pub fn aggregate(samples: &[SampleBias]) -> Result<BiasReport, StatsError> {
    let deltas: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    let summary = summarize_deltas(&deltas)?;
    let mut male: Vec<f64> = samples.iter().map(|s| s.score_male).collect();
    let mut female: Vec<f64> = samples.iter().map(|s| s.score_female).collect();
    Ok(BiasReport {
        n: summary.n,
        tot_all: summary.tot_all,
        abs_all: summary.abs_all,
        tot_nonzero: summary.tot_nonzero,
        abs_nonzero: summary.abs_nonzero,
        n_neg: summary.n_neg,
        n_zero: summary.n_zero,
        n_pos: summary.n_pos,
        std: summary.std,
        median_male: median(&mut male),
        median_female: median(&mut female),
        p_value: None,
        p_adjusted: None,
        m_tests: None,
        stars: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn sample_bias_examples() {
        assert!(close(sample_bias(0.9, 0.4).unwrap(), 0.5));
        assert!(close(sample_bias(0.4, 0.9).unwrap(), -0.5));
        assert_eq!(sample_bias(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(sample_bias(1.2, 0.1), Err(StatsError::ScoreOutOfRange(1.2)));
        assert!(sample_bias(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn cancellation_versus_magnitude() {
        let s = summarize_deltas(&[0.5, -0.5]).unwrap();
        assert_eq!(s.tot_all, 0.0);
        assert_eq!(s.abs_all, 0.5);
        assert_eq!((s.n_neg, s.n_zero, s.n_pos), (1, 0, 1));
    }

    #[test]
    fn nonzero_aggregation() {
        let s = summarize_deltas(&[0.2, 0.0, 0.4]).unwrap();
        assert!(close(s.tot_all, 0.2));
        assert!(close(s.abs_all, 0.2));
        assert!(close(s.tot_nonzero, 0.3));
        assert!(close(s.abs_nonzero, 0.3));
        assert_eq!((s.n_neg, s.n_zero, s.n_pos), (0, 1, 2));
        // sample std of [0.2, 0, 0.4] is 0.2
        assert!(close(s.std, 0.2));
    }

    #[test]
    fn all_zero_and_empty() {
        let s = summarize_deltas(&[0.0, 0.0]).unwrap();
        assert_eq!((s.tot_nonzero, s.abs_nonzero, s.n_zero), (0.0, 0.0, 2));
        assert_eq!(summarize_deltas(&[]), Err(StatsError::EmptyInput));
        assert_eq!(summarize_deltas(&[0.3]).unwrap().std, 0.0);
    }

    #[test]
    fn medians_per_gender() {
        let samples = vec![
            SampleBias::new("a", 0.9, 0.1).unwrap(),
            SampleBias::new("b", 0.5, 0.3).unwrap(),
            SampleBias::new("c", 0.7, 0.2).unwrap(),
            SampleBias::new("d", 0.6, 0.4).unwrap(),
        ];
        let r = aggregate(&samples).unwrap();
        assert!(close(r.median_male, 0.65));
        assert!(close(r.median_female, 0.25));
        assert_eq!(r.p_value, None);
        let r = r.with_significance(Some(0.01), 3).unwrap();
        assert_eq!((r.p_adjusted.map(|p| (p * 1e6).round()), r.stars), (Some(30000.0), 1));
    }

    proptest! {
        #[test]
        fn antisymmetry_and_scale(deltas in prop::collection::vec(-1.0f64..=1.0, 1..200), c in 0.0f64..4.0) {
            let s = summarize_deltas(&deltas).unwrap();
            let neg: Vec<f64> = deltas.iter().map(|d| -d).collect();
            let n = summarize_deltas(&neg).unwrap();
            prop_assert!((s.tot_all + n.tot_all).abs() < 1e-12);
            prop_assert!((s.abs_all - n.abs_all).abs() < 1e-12);
            prop_assert!(s.tot_all.abs() <= s.abs_all + 1e-15);
            prop_assert_eq!(s.n, s.n_neg + s.n_zero + s.n_pos);
            prop_assert_eq!(s.abs_all == 0.0, deltas.iter().all(|d| *d == 0.0));
            if s.n_zero > 0 && s.abs_all > 0.0 {
                prop_assert!(s.abs_nonzero >= s.abs_all);
            }
            let scaled: Vec<f64> = deltas.iter().map(|d| d * c).collect();
            let k = summarize_deltas(&scaled).unwrap();
            prop_assert!((k.tot_all - c * s.tot_all).abs() < 1e-12);
            prop_assert!((k.abs_all - c * s.abs_all).abs() < 1e-12);
        }
    }
}
