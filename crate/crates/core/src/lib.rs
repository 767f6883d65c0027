//! Counterfactual gender-bias auditing for binary sentiment classifiers.
//!
//! Test reviews are rewritten into an all-female and an all-male version by
//! swapping gendered terms, both versions are scored by the classifier under
//! audit, and the score differences are aggregated and tested for
//! significance.

pub mod audit;
pub mod corpus;
mod error;
mod jsonl;
pub mod lexicon;
pub mod report;
pub mod scorer;
pub mod stats;
pub mod transform;

pub use audit::{run_audit, AuditConfig, AuditRunRecord, CorpusSource, EvalRecord};
pub use corpus::{Corpus, Label, Review, Split};
pub use error::{Error, Stage};
pub use jsonl::{read_jsonl, write_jsonl};
pub use lexicon::{Gender, GenderedRule, SetName, TermSet};
pub use report::{render_report, Analysis, ReportFormat};
pub use scorer::{ScoreRequest, ScoreResponse, Scorer, ScorerDescriptor};
pub use stats::{BiasReport, EvalMetrics, SampleBias};
pub use transform::{Condition, ConditionKind, ExperimentalPair};
