use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use reqwest::blocking::Client;
use reqwest::header::CONTENT_TYPE;

use super::{
    align_responses, ScoreBatchRequest, ScoreBatchResponse, ScoreRequest, ScoreResponse, Scorer,
    ScorerError, ScoringOptions,
};

/// Client for the `POST /v1/score` protocol. Requests are chunked and sent
/// with bounded parallelism; transient failures are retried with
/// exponential backoff.
pub struct HttpScorer {
    endpoint: String,
    client: Client,
    options: ScoringOptions,
}

impl HttpScorer {
    /// `base` is either the server root or the full `/v1/score` URL.
    pub fn new(base: &str, options: ScoringOptions) -> Result<Self, ScorerError> {
        let base = base.trim_end_matches('/');
        let endpoint = if base.ends_with("/v1/score") {
            base.to_string()
        } else {
            format!("{base}/v1/score")
        };
        let client = Client::builder()
            .timeout(options.timeout)
            .build()
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint,
            client,
            options,
        })
    }

    fn post_once(&self, chunk: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let body = serde_json::to_string(&ScoreBatchRequest {
            texts: chunk.to_vec(),
        })
        .expect("request serializes");
        let response = self
            .client
            .post(&self.endpoint)
            .header(CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ScorerError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let parsed: ScoreBatchResponse =
            serde_json::from_str(&text).map_err(|e| ScorerError::Malformed(e.to_string()))?;
        align_responses(chunk, parsed.scores)
    }

    fn post_with_retry(&self, chunk: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let mut delay = self.options.backoff;
        let mut attempt = 1;
        loop {
            match self.post_once(chunk) {
                Err(err) if attempt < self.options.attempts && is_transient(&err) => {
                    log::warn!("scoring attempt {attempt} failed: {err}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

fn is_transient(err: &ScorerError) -> bool {
    match err {
        ScorerError::Transport(_) => true,
        ScorerError::Status { status, .. } => *status >= 500 || *status == 429,
        _ => false,
    }
}

type BatchResult = Result<Vec<ScoreResponse>, ScorerError>;

impl Scorer for HttpScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        let chunks: Vec<&[ScoreRequest]> = requests.chunks(self.options.batch_size.max(1)).collect();
        let results: Mutex<Vec<Option<BatchResult>>> =
            Mutex::new((0..chunks.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.options.max_in_flight.clamp(1, chunks.len().max(1));

        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let result = self.post_with_retry(chunks[i]);
                    let failed = result.is_err();
                    results.lock().expect("lock")[i] = Some(result);
                    if failed {
                        // Stop handing out further chunks.
                        next.store(chunks.len(), Ordering::Relaxed);
                    }
                });
            }
        });

        let mut out = Vec::with_capacity(requests.len());
        for result in results.into_inner().expect("lock").into_iter().flatten() {
            out.extend(result?);
        }
        if out.len() != requests.len() {
            return Err(ScorerError::Malformed("scoring stopped before all batches completed".into()));
        }
        Ok(out)
    }
}
