//! Sentiment scoring through a pluggable classifier.
//!
//! Every backend returns one score in `[0, 1]` per request id. Responses are
//! checked for an exact id bijection and for range; out-of-range scores and
//! NaNs are errors, never clamped.

mod file;
mod http;
mod mock;
mod serve;

pub use file::{done_path, file_roundtrip, FileExchange, FileScorer};
pub use http::HttpScorer;
pub use mock::{logistic, mock_score, MockScorer, MockScorerSpec};
pub use serve::{router, serve, MockServer};

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transform::ExperimentalPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub text: String,
}

impl ScoreRequest {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub score: f64,
}

/// HTTP request body for `POST /v1/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBatchRequest {
    pub texts: Vec<ScoreRequest>,
}

/// HTTP response body for `POST /v1/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBatchResponse {
    pub scores: Vec<ScoreResponse>,
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("empty scoring batch")]
    EmptyBatch,
    #[error("duplicate request id `{0}`")]
    DuplicateRequestId(String),
    #[error("response is missing id `{0}`")]
    MissingId(String),
    #[error("response contains unknown id `{0}`")]
    UnexpectedId(String),
    #[error("response contains id `{0}` more than once")]
    DuplicateResponseId(String),
    #[error("score {score} for `{id}` is outside [0, 1]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("scorer returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("timed out after {0:?} waiting for scores")]
    Timeout(Duration),
    #[error("invalid scorer descriptor `{0}` (expected mock:<spec>, mock-random:<seed>, http:<url> or file:<dir>)")]
    InvalidDescriptor(String),
    #[error("mock spec {path}: {reason}")]
    MockSpec { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A classifier that maps texts to positive-class probabilities.
pub trait Scorer: Send + Sync {
    /// Scores a batch; the result is in request order.
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError>;
}

/// Rejects empty batches and duplicate request ids.
pub fn check_requests(requests: &[ScoreRequest]) -> Result<(), ScorerError> {
    if requests.is_empty() {
        return Err(ScorerError::EmptyBatch);
    }
    let mut seen = HashSet::with_capacity(requests.len());
    for r in requests {
        if !seen.insert(r.id.as_str()) {
            return Err(ScorerError::DuplicateRequestId(r.id.clone()));
        }
    }
    Ok(())
}

/// Checks the id bijection and score range, and reorders responses to
/// match the requests.
pub fn align_responses(
    requests: &[ScoreRequest],
    responses: Vec<ScoreResponse>,
) -> Result<Vec<ScoreResponse>, ScorerError> {
    let wanted: HashSet<&str> = requests.iter().map(|r| r.id.as_str()).collect();
    let mut by_id: HashMap<String, f64> = HashMap::with_capacity(responses.len());
    for resp in responses {
        if !(0.0..=1.0).contains(&resp.score) {
            return Err(ScorerError::ScoreOutOfRange {
                id: resp.id,
                score: resp.score,
            });
        }
        if !wanted.contains(resp.id.as_str()) {
            return Err(ScorerError::UnexpectedId(resp.id));
        }
        if by_id.insert(resp.id.clone(), resp.score).is_some() {
            return Err(ScorerError::DuplicateResponseId(resp.id));
        }
    }
    requests
        .iter()
        .map(|r| {
            by_id
                .get(&r.id)
                .map(|&score| ScoreResponse {
                    id: r.id.clone(),
                    score,
                })
                .ok_or_else(|| ScorerError::MissingId(r.id.clone()))
        })
        .collect()
}

/// Two requests per pair: `<id>#f` then `<id>#m`.
pub fn pair_requests(pairs: &[ExperimentalPair]) -> Vec<ScoreRequest> {
    pairs
        .iter()
        .flat_map(|p| {
            [
                ScoreRequest::new(format!("{}#f", p.id), p.female_text.clone()),
                ScoreRequest::new(format!("{}#m", p.id), p.male_text.clone()),
            ]
        })
        .collect()
}

/// Batching and retry settings for remote scorers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringOptions {
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub poll_interval: Duration,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_in_flight: 4,
            attempts: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(3600),
            poll_interval: Duration::from_millis(250),
        }
    }
}

/// `mock:<spec.json>`, `mock-random:<seed>`, `http:<url>` or `file:<dir>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ScorerDescriptor {
    Mock(PathBuf),
    MockRandom(u64),
    Http(String),
    File(PathBuf),
}

impl std::fmt::Display for ScorerDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScorerDescriptor::Mock(p) => write!(f, "mock:{}", p.display()),
            ScorerDescriptor::MockRandom(seed) => write!(f, "mock-random:{seed}"),
            ScorerDescriptor::Http(url) => write!(f, "http:{url}"),
            ScorerDescriptor::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for ScorerDescriptor {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || ScorerError::InvalidDescriptor(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(invalid)?;
        if rest.is_empty() {
            return Err(invalid());
        }
        match kind {
            "mock" => Ok(ScorerDescriptor::Mock(PathBuf::from(rest))),
            "mock-random" => rest.parse().map(ScorerDescriptor::MockRandom).map_err(|_| invalid()),
            // `http:http://host:port` and the shorter `http://host:port` both work.
            "http" | "https" if rest.starts_with("//") => Ok(ScorerDescriptor::Http(s.to_string())),
            "http" => Ok(ScorerDescriptor::Http(rest.to_string())),
            "file" => Ok(ScorerDescriptor::File(PathBuf::from(rest))),
            _ => Err(invalid()),
        }
    }
}

impl From<ScorerDescriptor> for String {
    fn from(d: ScorerDescriptor) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for ScorerDescriptor {
    type Error = ScorerError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl ScorerDescriptor {
    /// Instantiates the backend.
    pub fn build(&self, options: ScoringOptions) -> Result<Box<dyn Scorer>, ScorerError> {
        Ok(match self {
            ScorerDescriptor::Mock(path) => Box::new(MockScorer::new(MockScorerSpec::load(path)?)),
            ScorerDescriptor::MockRandom(seed) => Box::new(MockScorer::new(MockScorerSpec::random(*seed))),
            ScorerDescriptor::Http(url) => Box::new(HttpScorer::new(url, options)?),
            ScorerDescriptor::File(dir) => Box::new(FileScorer::new(dir, options)),
        })
    }
}

/// Validates the batch, scores it and checks the responses.
pub fn score_batch(scorer: &dyn Scorer, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
    check_requests(requests)?;
    let responses = scorer.score_batch(requests)?;
    align_responses(requests, responses)
}
