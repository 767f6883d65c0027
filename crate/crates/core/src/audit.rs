//! End-to-end audit of one sentiment classifier: ingest, prepare and pair,
//! score, analyze, report.
//!
//! Every stage writes flat files into the output directory and records their
//! SHA-256 in `manifest.json`. A stage whose inputs hash to the same key as in
//! the manifest, and whose outputs are still intact, is skipped on rerun.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    ingest_imdb, ingest_records, read_corpus, write_corpus, Corpus, Label, RecordFormat, Split,
};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::lexicon::{resolve_set, TermSet};
use crate::report::{render_report, Analysis, ReportFormat, SCHEMA_VERSION};
use crate::scorer::{
    pair_requests, score_batch, ScoreRequest, ScoreResponse, Scorer, ScorerDescriptor, ScoringOptions,
};
use crate::stats::{
    aggregate, eval_metrics, wilcoxon_deltas, SampleBias, StatsError, TestMethod, WilcoxonOptions,
    ZeroPolicy,
};
use crate::transform::{make_pairs, prepare_training, remove_terms, ConditionKind, ExperimentalPair};
use crate::{Error, Stage};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "BIASLENS_CONFIG";

/// One classifier under audit, plus everything needed to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub model: String,
    /// IMDB-style directory with `train/` and `test/`.
    pub imdb: Option<PathBuf>,
    /// JSONL or CSV review records.
    pub records: Option<PathBuf>,
    /// Corpus previously written by `ingest`.
    pub corpus: Option<PathBuf>,
    /// `pro`, `weat`, `all` or `custom:<path>`.
    pub set: String,
    pub condition: ConditionKind,
    /// Scorer descriptor; plain `mock-random` takes its seed from `seed`.
    pub scorer: String,
    pub m_tests: Option<usize>,
    pub threshold: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads for data stages; unset uses all cores.
    pub workers: Option<usize>,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub zero_policy: ZeroPolicy,
    pub test_method: TestMethod,
    /// Also score the treated test reviews and compute accuracy metrics.
    pub evaluate: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let scoring = ScoringOptions::default();
        Self {
            model: "model".into(),
            imdb: None,
            records: None,
            corpus: None,
            set: "pro".into(),
            condition: ConditionKind::Original,
            scorer: "mock-random".into(),
            m_tests: None,
            threshold: 0.5,
            out_dir: PathBuf::from("biaslens-out"),
            seed: 0,
            workers: None,
            batch_size: scoring.batch_size,
            max_in_flight: scoring.max_in_flight,
            zero_policy: ZeroPolicy::default(),
            test_method: TestMethod::default(),
            evaluate: true,
        }
    }
}

/// Where reviews come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    Imdb(PathBuf),
    Records(PathBuf),
    Corpus(PathBuf),
}

impl AuditConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn source(&self) -> Result<CorpusSource, Error> {
        let sources: Vec<CorpusSource> = [
            self.imdb.clone().map(CorpusSource::Imdb),
            self.records.clone().map(CorpusSource::Records),
            self.corpus.clone().map(CorpusSource::Corpus),
        ]
        .into_iter()
        .flatten()
        .collect();
        match <[CorpusSource; 1]>::try_from(sources) {
            Ok([source]) => Ok(source),
            Err(v) if v.is_empty() => Err(Error::Config("no corpus source (set imdb, records or corpus)".into())),
            Err(_) => Err(Error::Config("more than one corpus source given".into())),
        }
    }

    pub fn scorer_descriptor(&self) -> Result<ScorerDescriptor, Error> {
        if self.scorer == "mock-random" {
            return Ok(ScorerDescriptor::MockRandom(self.seed));
        }
        self.scorer
            .parse()
            .map_err(|e: crate::scorer::ScorerError| Error::Config(e.to_string()))
    }

    pub fn scoring_options(&self) -> ScoringOptions {
        ScoringOptions {
            batch_size: self.batch_size,
            max_in_flight: self.max_in_flight,
            ..ScoringOptions::default()
        }
    }

    pub fn wilcoxon_options(&self) -> WilcoxonOptions {
        WilcoxonOptions {
            zero_policy: self.zero_policy,
            method: self.test_method,
            ..WilcoxonOptions::default()
        }
    }

    pub fn m(&self) -> usize {
        self.m_tests.unwrap_or(1)
    }

    /// Checks that every reference resolves before any work starts.
    pub fn validate(&self) -> Result<(TermSet, ScorerDescriptor), Error> {
        let source = self.source()?;
        let path = match &source {
            CorpusSource::Imdb(p) | CorpusSource::Records(p) | CorpusSource::Corpus(p) => p,
        };
        if !path.exists() {
            return Err(Error::Config(format!("corpus source {} does not exist", path.display())));
        }
        if let CorpusSource::Records(p) = &source {
            if RecordFormat::from_path(p).is_none() {
                return Err(Error::Config(format!("{}: expected a .jsonl or .csv file", p.display())));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.m_tests == Some(0) {
            return Err(Error::Config("m_tests must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.batch_size == 0 || self.max_in_flight == 0 {
            return Err(Error::Config("batch_size and max_in_flight must be at least 1".into()));
        }
        let set = resolve_set(&self.set).map_err(|e| Error::Config(e.to_string()))?;
        let scorer = self.scorer_descriptor()?;
        if let ScorerDescriptor::Mock(p) = &scorer {
            if !p.exists() {
                return Err(Error::Config(format!("mock spec {} does not exist", p.display())));
            }
        }
        Ok((set, scorer))
    }
}

/// A treated test review scored for accuracy metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub millis: u128,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRunRecord {
    pub schema_version: u32,
    pub config: AuditConfig,
    pub stages: Vec<StageTiming>,
    /// File name to SHA-256 of every file written by the run.
    pub hashes: BTreeMap<String, String>,
    pub analysis: Analysis,
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const EVAL_FILE: &str = "eval.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";
pub const RECORD_FILE: &str = "run.json";
const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String, Error> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hash over relative paths and contents of every file below `root`.
fn sha256_tree(root: &Path) -> Result<String, Error> {
    fn walk(dir: &Path, files: &mut Vec<PathBuf>) -> Result<(), Error> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(&path, files)?;
            } else {
                files.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(root).unwrap_or(&f);
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(fs::read(&f).map_err(|e| Error::io(&f, e))?);
        hasher.update([0]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn key(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0]);
    }
    hex::encode(hasher.finalize())
}

pub fn ingest_source(source: &CorpusSource) -> Result<Corpus, Error> {
    Ok(match source {
        CorpusSource::Imdb(dir) => {
            let (train, test) = ingest_imdb(dir)?;
            let mut reviews = train.reviews;
            reviews.extend(test.reviews);
            Corpus::new(reviews, "original", dir.display().to_string())?
        }
        CorpusSource::Records(path) => {
            let format = RecordFormat::from_path(path)
                .ok_or_else(|| Error::Config(format!("{}: expected a .jsonl or .csv file", path.display())))?;
            ingest_records(path, format)?
        }
        CorpusSource::Corpus(path) => read_corpus(path)?,
    })
}

/// Training data for the condition, built from the train split.
pub fn prepare_stage(corpus: &Corpus, condition: ConditionKind, set: &TermSet) -> Corpus {
    prepare_training(&corpus.split(Split::Train), &condition.with_set(set.name().clone()), set)
}

/// Masked pairs and treated evaluation texts from the test split.
pub fn pair_stage(
    corpus: &Corpus,
    condition: ConditionKind,
    set: &TermSet,
) -> Result<(Vec<ExperimentalPair>, Vec<EvalRecord>), Error> {
    let test = corpus.split(Split::Test);
    if test.is_empty() {
        return Err(Error::Data("corpus has no test reviews".into()));
    }
    let pairs = make_pairs(&test, set);
    let eval = test
        .reviews
        .iter()
        .map(|r| EvalRecord {
            id: r.id.clone(),
            text: match condition {
                ConditionKind::Removed => remove_terms(&r.text, set),
                _ => r.text.clone(),
            },
            label: r.label,
        })
        .collect();
    Ok((pairs, eval))
}

/// Scores both versions of every pair, then the evaluation texts, in one
/// batch. Responses come back in request order.
pub fn score_stage(
    scorer: &dyn Scorer,
    pairs: &[ExperimentalPair],
    eval: &[EvalRecord],
) -> Result<Vec<ScoreResponse>, Error> {
    let mut requests = pair_requests(pairs);
    requests.extend(eval.iter().map(|e| ScoreRequest::new(e.id.clone(), e.text.clone())));
    Ok(score_batch(scorer, &requests)?)
}

/// Labels attached to an analysis result.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub model: String,
    pub condition: ConditionKind,
    pub set: crate::lexicon::SetName,
    pub m_tests: usize,
    pub threshold: f64,
    pub wilcoxon: WilcoxonOptions,
}

pub fn analyze_stage(
    pairs: &[ExperimentalPair],
    scores: &[ScoreResponse],
    eval: &[EvalRecord],
    options: &AnalyzeOptions,
) -> Result<Analysis, Error> {
    let by_id: HashMap<&str, f64> = scores.iter().map(|s| (s.id.as_str(), s.score)).collect();
    let lookup = |id: String| {
        by_id
            .get(id.as_str())
            .copied()
            .ok_or_else(|| Error::Data(format!("no score for `{id}`")))
    };
    let samples = pairs
        .iter()
        .map(|p| {
            let female = lookup(format!("{}#f", p.id))?;
            let male = lookup(format!("{}#m", p.id))?;
            Ok(SampleBias::new(p.id.clone(), male, female)?)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let deltas: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    let wilcoxon = match wilcoxon_deltas(&deltas, options.wilcoxon) {
        Ok(w) => Some(w),
        Err(StatsError::NoNonzeroDifferences) => None,
        Err(e) => return Err(e.into()),
    };
    let report = aggregate(&samples)?.with_significance(wilcoxon.as_ref().map(|w| w.p_value), options.m_tests)?;
    let metrics = if eval.is_empty() {
        None
    } else {
        let eval_scores = eval.iter().map(|e| lookup(e.id.clone())).collect::<Result<Vec<_>, _>>()?;
        let labels: Vec<Label> = eval.iter().map(|e| e.label).collect();
        Some(eval_metrics(&eval_scores, &labels, options.threshold)?)
    };
    Ok(Analysis {
        schema_version: SCHEMA_VERSION,
        model: options.model.clone(),
        condition: options.condition,
        set: options.set.clone(),
        report,
        wilcoxon,
        metrics,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_report(analyses: &[Analysis], path: &Path, format: ReportFormat) -> Result<(), Error> {
    let text = render_report(analyses, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StageEntry {
    key: String,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    stages: BTreeMap<Stage, StageEntry>,
}

struct Runner {
    dir: PathBuf,
    manifest: Manifest,
    timings: Vec<StageTiming>,
    hashes: BTreeMap<String, String>,
}

impl Runner {
    fn open(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        let manifest = if path.exists() {
            read_json(&path).unwrap_or_else(|e| {
                log::warn!("ignoring unreadable manifest: {e}");
                Manifest::default()
            })
        } else {
            Manifest::default()
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            timings: Vec::new(),
            hashes: BTreeMap::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn hash(&self, name: &str) -> Result<String, Error> {
        sha256_file(&self.path(name))
    }

    fn is_current(&self, stage: Stage, key: &str) -> bool {
        let Some(entry) = self.manifest.stages.get(&stage) else {
            return false;
        };
        entry.key == key
            && entry
                .outputs
                .iter()
                .all(|(name, hash)| self.hash(name).is_ok_and(|h| &h == hash))
    }

    fn run(
        &mut self,
        stage: Stage,
        key: String,
        outputs: &[&str],
        body: impl FnOnce(&Path) -> Result<(), Error>,
    ) -> Result<(), Error> {
        let start = Instant::now();
        let skipped = self.is_current(stage, &key);
        if skipped {
            log::info!("{stage}: inputs unchanged, skipping");
        } else {
            log::info!("{stage}: running");
            body(&self.dir).map_err(|e| e.in_stage(stage))?;
            let mut entry = StageEntry { key, outputs: BTreeMap::new() };
            for name in outputs {
                entry.outputs.insert(name.to_string(), self.hash(name).map_err(|e| e.in_stage(stage))?);
            }
            self.manifest.stages.insert(stage, entry);
            write_json(&self.path(MANIFEST_FILE), &self.manifest)?;
        }
        for name in outputs {
            let hash = self.manifest.stages[&stage].outputs[*name].clone();
            self.hashes.insert(name.to_string(), hash);
        }
        self.timings.push(StageTiming {
            stage,
            millis: start.elapsed().as_millis(),
            skipped,
        });
        Ok(())
    }
}

/// Runs every stage, skipping those whose inputs are unchanged, and writes
/// `run.json` next to the intermediates.
pub fn run_audit(config: &AuditConfig) -> Result<AuditRunRecord, Error> {
    let (set, descriptor) = config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_stages(config, &set, &descriptor))
}

fn run_stages(config: &AuditConfig, set: &TermSet, descriptor: &ScorerDescriptor) -> Result<AuditRunRecord, Error> {
    let mut runner = Runner::open(&config.out_dir)?;
    let source = config.source()?;
    let set_key = key(&[&set.name().to_string(), &set.to_tsv()]);
    let condition = config.condition.label();

    let source_key = match &source {
        CorpusSource::Imdb(p) => key(&["imdb", &sha256_tree(p)?]),
        CorpusSource::Records(p) => key(&["records", &p.to_string_lossy(), &sha256_file(p)?]),
        CorpusSource::Corpus(p) => key(&["corpus", &sha256_file(p)?]),
    };
    runner.run(Stage::Ingest, source_key, &[CORPUS_FILE], |dir| {
        let corpus = ingest_source(&source)?;
        log::info!("ingested {} reviews", corpus.len());
        Ok(write_corpus(&corpus, &dir.join(CORPUS_FILE))?)
    })?;
    let corpus_hash = runner.hash(CORPUS_FILE)?;

    let mut corpus_cache: Option<Corpus> = None;
    let mut load_corpus = |dir: &Path| -> Result<Corpus, Error> {
        if corpus_cache.is_none() {
            corpus_cache = Some(read_corpus(&dir.join(CORPUS_FILE))?);
        }
        Ok(corpus_cache.clone().expect("loaded"))
    };

    runner.run(
        Stage::Prepare,
        key(&[&corpus_hash, condition, &set_key]),
        &[TRAIN_FILE],
        |dir| {
            let train = prepare_stage(&load_corpus(dir)?, config.condition, set);
            Ok(write_corpus(&train, &dir.join(TRAIN_FILE))?)
        },
    )?;

    runner.run(
        Stage::Pair,
        key(&[&corpus_hash, condition, &set_key]),
        &[PAIRS_FILE, EVAL_FILE],
        |dir| {
            let (pairs, eval) = pair_stage(&load_corpus(dir)?, config.condition, set)?;
            write_jsonl(&dir.join(PAIRS_FILE), &pairs)?;
            write_jsonl(&dir.join(EVAL_FILE), &eval)
        },
    )?;

    let scorer_key = match descriptor {
        ScorerDescriptor::Mock(p) => key(&[&descriptor.to_string(), &sha256_file(p)?]),
        other => other.to_string(),
    };
    let pairs_hash = runner.hash(PAIRS_FILE)?;
    let eval_hash = runner.hash(EVAL_FILE)?;
    let evaluate = if config.evaluate { "eval" } else { "no-eval" };
    runner.run(
        Stage::Score,
        key(&[&pairs_hash, &eval_hash, evaluate, &scorer_key]),
        &[SCORES_FILE],
        |dir| {
            let pairs: Vec<ExperimentalPair> = read_jsonl(&dir.join(PAIRS_FILE))?;
            let eval: Vec<EvalRecord> = if config.evaluate {
                read_jsonl(&dir.join(EVAL_FILE))?
            } else {
                Vec::new()
            };
            let scorer = descriptor.build(config.scoring_options())?;
            let scores = score_stage(scorer.as_ref(), &pairs, &eval)?;
            write_jsonl(&dir.join(SCORES_FILE), &scores)
        },
    )?;

    let options = AnalyzeOptions {
        model: config.model.clone(),
        condition: config.condition,
        set: set.name().clone(),
        m_tests: config.m(),
        threshold: config.threshold,
        wilcoxon: config.wilcoxon_options(),
    };
    let scores_hash = runner.hash(SCORES_FILE)?;
    let analyze_key = key(&[
        &pairs_hash,
        &eval_hash,
        &scores_hash,
        evaluate,
        &serde_json::to_string(&(
            &options.model,
            options.condition,
            &options.set,
            options.m_tests,
            options.threshold,
            options.wilcoxon,
        ))
        .expect("serializes"),
    ]);
    runner.run(Stage::Analyze, analyze_key, &[ANALYSIS_FILE], |dir| {
        let pairs: Vec<ExperimentalPair> = read_jsonl(&dir.join(PAIRS_FILE))?;
        let eval: Vec<EvalRecord> = if config.evaluate {
            read_jsonl(&dir.join(EVAL_FILE))?
        } else {
            Vec::new()
        };
        let scores: Vec<ScoreResponse> = read_jsonl(&dir.join(SCORES_FILE))?;
        let analysis = analyze_stage(&pairs, &scores, &eval, &options)?;
        write_json(&dir.join(ANALYSIS_FILE), &analysis)
    })?;

    runner.run(
        Stage::Report,
        key(&[&runner.hash(ANALYSIS_FILE)?]),
        &[REPORT_CSV, REPORT_MD],
        |dir| {
            let analysis: Analysis = read_json(&dir.join(ANALYSIS_FILE))?;
            write_report(std::slice::from_ref(&analysis), &dir.join(REPORT_CSV), ReportFormat::Csv)?;
            write_report(std::slice::from_ref(&analysis), &dir.join(REPORT_MD), ReportFormat::Markdown)
        },
    )?;

    let analysis: Analysis = read_json(&runner.path(ANALYSIS_FILE))?;
    let record = AuditRunRecord {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        stages: runner.timings,
        hashes: runner.hashes,
        analysis,
    };
    write_json(&runner.dir.join(RECORD_FILE), &record)?;
    Ok(record)
}
