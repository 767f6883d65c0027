use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::lexicon::LexiconError;
use crate::report::ReportError;
use crate::scorer::ScorerError;
use crate::stats::StatsError;

/// Pipeline stages, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Prepare,
    Pair,
    Score,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Prepare,
        Stage::Pair,
        Stage::Score,
        Stage::Analyze,
        Stage::Report,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Prepare => "prepare",
            Stage::Pair => "pair",
            Stage::Score => "score",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// 1 for configuration problems, 3 for scorer protocol failures, 2 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) => 1,
            Error::Scorer(ScorerError::InvalidDescriptor(_)) => 1,
            Error::Scorer(_) => 3,
            _ => 2,
        }
    }
}
