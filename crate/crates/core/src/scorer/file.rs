//! Offline scoring through files, for classifiers on a separate host.
//!
//! The client writes `requests.jsonl` and waits until the peer has written
//! `responses.jsonl` followed by the sentinel `responses.jsonl.done`. A
//! response file that is already complete is picked up immediately, so a
//! stage can be rerun after scoring happened elsewhere.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{align_responses, ScoreRequest, ScoreResponse, Scorer, ScorerError, ScoringOptions};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScorerError + '_ {
    move |source| ScorerError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Sentinel marking a complete response file.
pub fn done_path(response_path: &Path) -> PathBuf {
    let mut name = response_path.as_os_str().to_owned();
    name.push(".done");
    PathBuf::from(name)
}

#[derive(Debug, Clone)]
pub struct FileExchange {
    pub request_path: PathBuf,
    pub response_path: PathBuf,
}

impl FileExchange {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            request_path: dir.join("requests.jsonl"),
            response_path: dir.join("responses.jsonl"),
        }
    }
}

fn write_requests(requests: &[ScoreRequest], path: &Path) -> Result<(), ScorerError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut out = BufWriter::new(fs::File::create(&tmp).map_err(io_err(&tmp))?);
        for r in requests {
            writeln!(out, "{}", serde_json::to_string(r).expect("request serializes"))
                .map_err(io_err(&tmp))?;
        }
        out.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_responses(path: &Path) -> Result<Vec<ScoreResponse>, ScorerError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let resp: ScoreResponse = serde_json::from_str(&line)
            .map_err(|e| ScorerError::Malformed(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(resp);
    }
    Ok(out)
}

/// Writes the request file, waits for the completed response file and
/// validates it against the requests.
pub fn file_roundtrip(
    requests: &[ScoreRequest],
    request_path: &Path,
    response_path: &Path,
    options: &ScoringOptions,
) -> Result<Vec<ScoreResponse>, ScorerError> {
    write_requests(requests, request_path)?;
    let sentinel = done_path(response_path);
    let start = Instant::now();
    while !sentinel.exists() {
        if start.elapsed() >= options.timeout {
            return Err(ScorerError::Timeout(options.timeout));
        }
        std::thread::sleep(options.poll_interval);
    }
    align_responses(requests, read_responses(response_path)?)
}

pub struct FileScorer {
    exchange: FileExchange,
    options: ScoringOptions,
}

impl FileScorer {
    pub fn new(dir: &Path, options: ScoringOptions) -> Self {
        Self {
            exchange: FileExchange::in_dir(dir),
            options,
        }
    }
}

impl Scorer for FileScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResponse>, ScorerError> {
        file_roundtrip(
            requests,
            &self.exchange.request_path,
            &self.exchange.response_path,
            &self.options,
        )
    }
}
