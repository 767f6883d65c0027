use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScoreRequest, ScoreResponse, Scorer, ScorerError};
use crate::lexicon::{builtin_set, SetName};

/// Bag-of-words logistic scorer. Deterministic and cheap, so it doubles as a
/// test oracle: with known weights the bias of any pair is computable by hand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScorerSpec {
    #[serde(default)]
    pub bias_term: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

impl MockScorerSpec {
    pub fn new(bias_term: f64, weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            bias_term,
            weights: weights.into_iter().collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let content = std::fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&content).map_err(|e| ScorerError::MockSpec {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Weights in `[-1, 1]` for every token of the `all` term set plus a
    /// few sentiment words, drawn from a seeded ChaCha stream.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all = builtin_set(&SetName::All).expect("embedded set parses");
        let mut vocab: Vec<&str> = all
            .rules()
            .iter()
            .flat_map(|r| [r.source.as_str(), r.target.as_str()])
            .chain(["good", "great", "bad", "awful", "boring", "excellent"])
            .collect();
        vocab.sort_unstable();
        vocab.dedup();
        let weights = vocab
            .into_iter()
            .map(|t| (t.to_string(), rng.random_range(-1.0..=1.0)))
            .collect();
        Self {
            bias_term: rng.random_range(-0.5..=0.5),
            weights,
        }
    }
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `logistic(bias_term + sum of token weights)` over whitespace tokens.
pub fn mock_score(spec: &MockScorerSpec, text: &str) -> f64 {
    let z = text
        .split_whitespace()
        .filter_map(|t| spec.weights.get(t))
        .fold(spec.bias_term, |acc, w| acc + w);
    logistic(z)
}

#[derive(Debug, Clone)]
pub struct MockScorer {
    spec: MockScorerSpec,
}

impl MockScorer {
    pub fn new(spec: MockScorerSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &MockScorerSpec {
        &self.spec
    }
}

impl Scorer for MockScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        Ok(requests
            .par_iter()
            .map(|r| ScoreResponse {
                id: r.id.clone(),
                score: mock_score(&self.spec, &r.text),
            })
            .collect())
    }
}
