use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use biaslens::audit::{
    analyze_stage, ingest_source, pair_stage, prepare_stage, read_json, run_audit, score_stage, write_json,
    AnalyzeOptions, AuditConfig, AuditRunRecord, EvalRecord, CONFIG_ENV,
};
use biaslens::corpus::{read_corpus, write_corpus};
use biaslens::lexicon::{resolve_set, validate, SetName, TermSet, ValidationReport};
use biaslens::scorer::{MockServer, ScoreResponse, ScorerDescriptor};
use biaslens::stats::{TestMethod, ZeroPolicy};
use biaslens::{read_jsonl, render_report, write_jsonl, Analysis, ConditionKind, ExperimentalPair, ReportFormat};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biaslens", version, about = "Counterfactual gender-bias audits of sentiment classifiers")]
struct Cli {
    /// Configuration file (TOML); flags override its keys.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring configuration keys.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    model: Option<String>,
    /// pro, weat, all or custom:<path>
    #[arg(long, global = true)]
    set: Option<String>,
    /// original, R or mix
    #[arg(long, global = true)]
    condition: Option<ConditionKind>,
    /// mock:<spec.json>, mock-random[:<seed>], http:<url> or file:<dir>
    #[arg(long, global = true)]
    scorer: Option<String>,
    /// Number of tests for the Bonferroni correction.
    #[arg(long, global = true)]
    m_tests: Option<usize>,
    /// Decision threshold for accuracy metrics.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    /// discard or pratt
    #[arg(long, global = true, value_parser = parse_zero_policy)]
    zero_policy: Option<ZeroPolicy>,
    /// auto, exact or normal
    #[arg(long, global = true, value_parser = parse_test_method)]
    test_method: Option<TestMethod>,
}

fn parse_zero_policy(s: &str) -> Result<ZeroPolicy, String> {
    match s {
        "discard" => Ok(ZeroPolicy::Discard),
        "pratt" => Ok(ZeroPolicy::Pratt),
        _ => Err("expected discard or pratt".into()),
    }
}

fn parse_test_method(s: &str) -> Result<TestMethod, String> {
    match s {
        "auto" => Ok(TestMethod::Auto),
        "exact" => Ok(TestMethod::Exact),
        "normal" => Ok(TestMethod::Normal),
        _ => Err("expected auto, exact or normal".into()),
    }
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct SourceArgs {
    /// IMDB-style directory with train/ and test/.
    #[arg(long)]
    imdb: Option<PathBuf>,
    /// JSONL review records.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// CSV review records.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Corpus written by `ingest`.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

impl SourceArgs {
    fn apply(&self, config: &mut AuditConfig) {
        let records = self.jsonl.clone().or_else(|| self.csv.clone());
        if self.imdb.is_some() || records.is_some() || self.corpus.is_some() {
            config.imdb = self.imdb.clone();
            config.records = records;
            config.corpus = self.corpus.clone();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read reviews into a corpus file.
    Ingest {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the training corpus for a condition from the train split.
    Prepare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mask the test split into female and male versions.
    Pair {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the treated test reviews for accuracy metrics.
        #[arg(long)]
        eval_out: Option<PathBuf>,
    },
    /// Score both versions of every pair (ids `<id>#f`, `<id>#m`).
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        /// Evaluation texts from `pair --eval-out`, scored after the pairs.
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute bias statistics from pairs and scores.
    Analyze {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render analysis or run files as a CSV or Markdown table.
    Report {
        /// analysis.json or run.json files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// csv or markdown
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage, skipping stages whose inputs are unchanged.
    RunAll {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Skip scoring the treated test reviews.
        #[arg(long)]
        no_eval: bool,
    },
    /// Term set utilities.
    Lexicon {
        #[command(subcommand)]
        command: LexiconCommand,
    },
    /// Serve a mock scorer over HTTP until interrupted.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Check term sets; without arguments checks pro within weat within all.
    Validate {
        /// Set specs (pro, weat, all or custom:<path>).
        sets: Vec<String>,
        /// Also require the sources to be a strict subset of this set's.
        #[arg(long)]
        within: Option<String>,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<AuditConfig> {
    let mut config = match &cli.config {
        Some(path) => AuditConfig::load(path)?,
        None => AuditConfig::default(),
    };
    let o = &cli.overrides;
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &o.$field {
                config.$field = v.clone();
            }
        )*};
    }
    set!(model, set, condition, scorer, threshold, seed, batch_size, max_in_flight, zero_policy, test_method);
    if o.m_tests.is_some() {
        config.m_tests = o.m_tests;
    }
    if o.workers.is_some() {
        config.workers = o.workers;
    }
    Ok(config)
}

fn term_set(config: &AuditConfig) -> anyhow::Result<TermSet> {
    Ok(resolve_set(&config.set).map_err(|e| biaslens::Error::Config(e.to_string()))?)
}

fn print_validation(report: &ValidationReport) {
    println!(
        "{}: {} pairs ({} bidirectional, {} one-directional), {} rules, {} terms",
        report.set, report.pairs, report.bidirectional, report.one_directional, report.rules, report.terms
    );
    for v in &report.violations {
        println!("  violation: {v}");
    }
}

fn lexicon_validate(sets: &[String], within: Option<&str>) -> anyhow::Result<bool> {
    let mut reports = Vec::new();
    if sets.is_empty() {
        let builtins = SetName::BUILTINS
            .iter()
            .map(biaslens::lexicon::builtin_set)
            .collect::<Result<Vec<_>, _>>()?;
        for (i, set) in builtins.iter().enumerate() {
            reports.push(validate(set, builtins.get(i + 1)));
        }
    } else {
        // A file that does not parse is reported as invalid, not as a data error.
        let load = |spec: &str| {
            resolve_set(spec).map_err(|e| {
                println!("{spec}: {e}");
            })
        };
        let Ok(outer) = within.map(load).transpose() else {
            return Ok(false);
        };
        for spec in sets {
            let Ok(set) = load(spec) else {
                return Ok(false);
            };
            reports.push(validate(&set, outer.as_ref()));
        }
    }
    reports.iter().for_each(print_validation);
    Ok(reports.iter().all(ValidationReport::is_valid))
}

fn read_results(path: &Path) -> anyhow::Result<Analysis> {
    let value: serde_json::Value = read_json(path)?;
    let value = if value.get("analysis").is_some() {
        serde_json::from_value::<AuditRunRecord>(value).map(|r| r.analysis)
    } else {
        serde_json::from_value::<Analysis>(value)
    };
    value
        .map_err(|e| biaslens::Error::Data(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Ingest { source, out } => {
            source.apply(&mut config);
            let corpus = ingest_source(&config.source()?)?;
            write_corpus(&corpus, &out)?;
            eprintln!("ingested {} reviews into {}", corpus.len(), out.display());
        }
        Command::Prepare { input, out } => {
            let set = term_set(&config)?;
            let train = prepare_stage(&read_corpus(&input)?, config.condition, &set);
            write_corpus(&train, &out)?;
        }
        Command::Pair { input, out, eval_out } => {
            let set = term_set(&config)?;
            let (pairs, eval) = pair_stage(&read_corpus(&input)?, config.condition, &set)?;
            write_jsonl(&out, &pairs)?;
            if let Some(path) = eval_out {
                write_jsonl(&path, &eval)?;
            }
        }
        Command::Score { input, eval, out } => {
            let descriptor = config.scorer_descriptor()?;
            let pairs: Vec<ExperimentalPair> = read_jsonl(&input)?;
            let eval: Vec<EvalRecord> = match eval {
                Some(path) => read_jsonl(&path)?,
                None => Vec::new(),
            };
            let scorer = descriptor.build(config.scoring_options()).map_err(biaslens::Error::from)?;
            let scores = score_stage(scorer.as_ref(), &pairs, &eval)?;
            write_jsonl(&out, &scores)?;
        }
        Command::Analyze {
            pairs,
            scores,
            eval,
            out,
        } => {
            let set = term_set(&config)?;
            let pairs: Vec<ExperimentalPair> = read_jsonl(&pairs)?;
            let scores: Vec<ScoreResponse> = read_jsonl(&scores)?;
            let eval: Vec<EvalRecord> = match eval {
                Some(path) => read_jsonl(&path)?,
                None => Vec::new(),
            };
            let options = AnalyzeOptions {
                model: config.model.clone(),
                condition: config.condition,
                set: set.name().clone(),
                m_tests: config.m(),
                threshold: config.threshold,
                wilcoxon: config.wilcoxon_options(),
            };
            write_json(&out, &analyze_stage(&pairs, &scores, &eval, &options)?)?;
        }
        Command::Report { inputs, format, out } => {
            let analyses = inputs.iter().map(|p| read_results(p)).collect::<anyhow::Result<Vec<_>>>()?;
            let text = render_report(&analyses, format).map_err(biaslens::Error::from)?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
        }
        Command::RunAll {
            source,
            out_dir,
            no_eval,
        } => {
            source.apply(&mut config);
            if let Some(dir) = out_dir {
                config.out_dir = dir;
            }
            if no_eval {
                config.evaluate = false;
            }
            let record = run_audit(&config)?;
            let r = &record.analysis.report;
            println!(
                "{} {}: n={} tot={:.4} abs={:.4} N<0={} N=0={} N>0={} sign={}",
                record.analysis.model,
                record.analysis.condition_label(),
                r.n,
                r.tot_nonzero,
                r.abs_nonzero,
                r.n_neg,
                r.n_zero,
                r.n_pos,
                biaslens::stats::stars_label(r.stars)
            );
            println!("results in {}", config.out_dir.display());
        }
        Command::Lexicon {
            command: LexiconCommand::Validate { sets, within },
        } => {
            if !lexicon_validate(&sets, within.as_deref())? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::MockServe { addr } => {
            let descriptor = config.scorer_descriptor()?;
            if !matches!(descriptor, ScorerDescriptor::Mock(_) | ScorerDescriptor::MockRandom(_)) {
                bail!(biaslens::Error::Config(format!("mock-serve needs a mock scorer, got `{descriptor}`")));
            }
            let scorer = descriptor.build(config.scoring_options()).map_err(biaslens::Error::from)?;
            let server = MockServer::start(addr, Arc::from(scorer)).context("starting server")?;
            println!("listening on {}", server.url());
            std::io::stdout().flush()?;
            server.wait().context("serving")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<biaslens::Error>().map_or(2, biaslens::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
