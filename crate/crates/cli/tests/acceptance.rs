//! Acceptance criteria P1-P10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Checks against the real IMDB dataset run when `BIASLENS_IMDB_DIR` points
//! at an extracted `aclImdb` directory.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use biaslens::audit::{run_audit, AuditConfig, REPORT_CSV, REPORT_MD};
use biaslens::corpus::{ingest_imdb, tokenize, Corpus, Label, Review, Split};
use biaslens::lexicon::{builtin_set, validate, Gender, GenderedRule, SetName, TermSet};
use biaslens::report::{render_report, Analysis, ReportFormat, SCHEMA_VERSION};
use biaslens::scorer::{logistic, MockScorerSpec};
use biaslens::stats::{
    aggregate, pearson, summarize_deltas, wilcoxon_deltas, BiasReport, SampleBias, TestMethod, WilcoxonOptions,
};
use biaslens::transform::{cda_augment, mask_to_gender, ConditionKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const NEUTRAL: [&str; 12] = [
    "the", "film", "was", "great", "a", "bad", "plot", "is", "and", "boring", "here", "very",
];

fn vocabulary(set: &TermSet) -> Vec<String> {
    let mut v: Vec<String> = set
        .rules()
        .iter()
        .flat_map(|r| [r.source.clone(), r.target.clone()])
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Random interleaving of gendered and neutral tokens.
fn random_text(rng: &mut ChaCha8Rng, gendered: &[String], len: usize) -> String {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.4) {
                gendered[rng.random_range(0..gendered.len())].as_str()
            } else {
                NEUTRAL[rng.random_range(0..NEUTRAL.len())]
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn review(id: String, text: String, split: Split) -> Review {
    Review {
        id,
        text,
        raw_text: None,
        star_rating: None,
        label: Label::Positive,
        split,
    }
}

fn builtins() -> Vec<TermSet> {
    SetName::BUILTINS.iter().map(|n| builtin_set(n).unwrap()).collect()
}

fn p1_masking() -> Outcome {
    let start = Instant::now();
    let sets = builtins();
    let gendered = vocabulary(&sets[2]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let texts: Vec<String> = (0..1000)
        .map(|_| {
            let len = rng.random_range(0..60);
            random_text(&mut rng, &gendered, len)
        })
        .collect();
    let mut checks = 0;
    let mut failures = Vec::new();
    for text in &texts {
        for set in &sets {
            for g in [Gender::Female, Gender::Male] {
                let (once, _) = mask_to_gender(text, set, g);
                let (twice, _) = mask_to_gender(&once, set, g);
                checks += 1;
                if twice != once {
                    failures.push(format!("not idempotent: {text:?}"));
                }
                if tokenize(&once).iter().any(|t| set.lookup(t, g).is_some()) {
                    failures.push(format!("not homogeneous: {text:?}"));
                }
                if tokenize(&once).len() != tokenize(text).len() {
                    failures.push(format!("token count changed: {text:?}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if !failures.is_empty() {
        return Err(format!("{} of {checks} checks failed, first: {}", failures.len(), failures[0]));
    }
    if secs >= 5.0 {
        return Err(format!("{checks} checks held but took {secs:.2} s (limit 5 s)"));
    }
    Ok(format!("{} texts, {checks} checks, all hold, {secs:.2} s", texts.len()))
}

fn bidirectional(set: &TermSet) -> TermSet {
    let rules: Vec<GenderedRule> = set.rules().iter().filter(|r| set.is_bidirectional(r)).cloned().collect();
    TermSet::from_rules(SetName::Custom("all-bidirectional".into()), rules).unwrap()
}

fn imdb_dir() -> Option<PathBuf> {
    std::env::var_os("BIASLENS_IMDB_DIR").map(PathBuf::from)
}

fn p2_cda_balance() -> Outcome {
    let set = bidirectional(&builtin_set(&SetName::All).unwrap());
    let gendered = vocabulary(&set);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reviews = (0..25_000)
        .map(|i| {
            let len = rng.random_range(5..40);
            review(format!("doc{i:05}"), random_text(&mut rng, &gendered, len), Split::Train)
        })
        .collect();
    let corpus = Corpus::new(reviews, "original", "synthetic").unwrap();
    let mixed = cda_augment(&corpus, &set);
    if mixed.len() != 2 * corpus.len() {
        return Err(format!("mixed size {} != 2 x {}", mixed.len(), corpus.len()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in &mixed.reviews {
        for t in tokenize(&r.text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let unbalanced: Vec<&GenderedRule> = set
        .rules()
        .iter()
        .filter(|r| counts.get(r.source.as_str()) != counts.get(r.target.as_str()))
        .collect();
    if let Some(r) = unbalanced.first() {
        return Err(format!("{} pairs unbalanced, e.g. {}/{}", unbalanced.len(), r.source, r.target));
    }
    let mut detail = format!(
        "synthetic: {} -> {} docs, {} pairs balanced",
        corpus.len(),
        mixed.len(),
        set.pairs().len()
    );
    match imdb_dir() {
        Some(dir) => {
            let (train, _) = ingest_imdb(&dir).map_err(|e| e.to_string())?;
            let mixed = cda_augment(&train, &builtin_set(&SetName::All).unwrap());
            if mixed.len() != 50_000 {
                return Err(format!("IMDB mixed corpus has {} docs, expected 50000", mixed.len()));
            }
            detail.push_str("; IMDB mixed train = 50000");
        }
        None => detail.push_str("; IMDB check skipped (BIASLENS_IMDB_DIR unset)"),
    }
    Ok(detail)
}

fn p3_aggregate_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut elements = 0usize;
    for case in 0..10_000 {
        let n = rng.random_range(1..=25_000);
        let deltas: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.0..=1.0) - rng.random_range(0.0..=1.0)
                }
            })
            .collect();
        elements += n;
        let s = summarize_deltas(&deltas).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        let mut abs = 0.0;
        let mut nonzero = 0usize;
        for d in &deltas {
            sum += d;
            abs += d.abs();
            if *d != 0.0 {
                nonzero += 1;
            }
        }
        let (nz_tot, nz_abs) = if nonzero == 0 {
            (0.0, 0.0)
        } else {
            (sum / nonzero as f64, abs / nonzero as f64)
        };
        let diffs = [
            s.tot_all - sum / n as f64,
            s.abs_all - abs / n as f64,
            s.tot_nonzero - nz_tot,
            s.abs_nonzero - nz_abs,
        ];
        let d = diffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(d);
        if d > 1e-12 {
            return Err(format!("case {case} (n = {n}) differs by {d:e}"));
        }
    }
    // The sample-level entry point agrees with the delta summary.
    let samples: Vec<SampleBias> = (0..500)
        .map(|i| SampleBias::new(format!("s{i}"), rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)).unwrap())
        .collect();
    let report = aggregate(&samples).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    let summary = summarize_deltas(&deltas).unwrap();
    if (report.tot_all, report.abs_all) != (summary.tot_all, summary.abs_all) {
        return Err("aggregate disagrees with summarize_deltas".into());
    }
    Ok(format!("10000 vectors ({elements} deltas), max |diff| {worst:.1e}"))
}

fn midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| w.abs() < v.abs()).count();
            let equal = values.iter().filter(|w| w.abs() == v.abs()).count();
            below as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

fn enumerated_p(deltas: &[f64]) -> f64 {
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = midranks(&nonzero);
    let observed: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nonzero.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        le += u64::from(w <= observed + 1e-9);
        ge += u64::from(w >= observed - 1e-9);
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

fn with_method(method: TestMethod) -> WilcoxonOptions {
    WilcoxonOptions {
        method,
        ..WilcoxonOptions::default()
    }
}

fn p4_wilcoxon() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    for case in 0..600 {
        let n = rng.random_range(1..=12);
        let deltas: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=3) as f64 / 10.0).collect();
        if deltas.iter().all(|d| *d == 0.0) {
            continue;
        }
        let p = wilcoxon_deltas(&deltas, with_method(TestMethod::Exact)).map_err(|e| e.to_string())?.p_value;
        let expected = enumerated_p(&deltas);
        if (p - expected).abs() > 1e-9 {
            return Err(format!("case {case} {deltas:?}: p = {p}, enumeration = {expected}"));
        }
        compared += 1;
    }
    let p123 = wilcoxon_deltas(&[1.0, 2.0, 3.0], WilcoxonOptions::default()).unwrap().p_value;
    if p123 != 0.25 {
        return Err(format!("[1, 2, 3] gives p = {p123}, expected 0.25"));
    }
    let mut worst: f64 = 0.0;
    let mut over = 0;
    let datasets = 500;
    for _ in 0..datasets {
        let shift = rng.random_range(-0.6..0.6);
        let deltas: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
        let exact = wilcoxon_deltas(&deltas, with_method(TestMethod::Exact)).unwrap().p_value;
        let approx = wilcoxon_deltas(&deltas, with_method(TestMethod::Normal)).unwrap().p_value;
        let d = (exact - approx).abs();
        worst = worst.max(d);
        over += usize::from(d > 0.005);
    }
    let summary = format!(
        "{compared} exact cases match enumeration; [1,2,3] p = 0.25; n = 25 normal vs exact: max |dp| {worst:.4} over {datasets} datasets"
    );
    if over > 0 {
        Err(format!("{summary}, {over} exceed 0.005"))
    } else {
        Ok(summary)
    }
}

fn direct_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

fn p5_pearson() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(3..500);
        let slope = rng.random_range(-2.0..2.0);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + rng.random_range(-10.0..10.0)).collect();
        let r = pearson(&x, &y).map_err(|e| e.to_string())?.r;
        worst = worst.max((r - direct_r(&x, &y)).abs());
    }
    if worst > 1e-12 {
        return Err(format!("max |r - oracle| = {worst:e}"));
    }
    let x: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
    let affine: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let r_pos = pearson(&x, &affine).unwrap().r;
    let r_neg = pearson(&x, &neg).unwrap().r;
    if (r_pos - 1.0).abs() > 1e-12 || (r_neg + 1.0).abs() > 1e-12 {
        return Err(format!("pearson(x, 2x+1) = {r_pos}, pearson(x, -x) = {r_neg}"));
    }
    Ok(format!("1000 pairs, max |diff| {worst:.1e}; r(x, 2x+1) = 1, r(x, -x) = -1"))
}

fn write_records(path: &Path, texts: &[String]) {
    let lines: Vec<String> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let label = if i % 2 == 0 { "positive" } else { "negative" };
            serde_json::json!({"id": format!("r{i:05}"), "text": t, "label": label}).to_string()
        })
        .collect();
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn write_spec(path: &Path, spec: &MockScorerSpec) {
    fs::write(path, serde_json::to_string(spec).unwrap()).unwrap();
}

fn mock_config(dir: &Path, records: &Path, spec: &Path, set: &str, out: &str) -> AuditConfig {
    AuditConfig {
        records: Some(records.to_path_buf()),
        scorer: format!("mock:{}", spec.display()),
        set: set.into(),
        out_dir: dir.join(out),
        ..AuditConfig::default()
    }
}

fn p6_gender_blind() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gendered = vocabulary(&builtin_set(&SetName::All).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = MockScorerSpec::new(
        -0.3,
        NEUTRAL.iter().map(|w| (w.to_string(), rng.random_range(-2.0..2.0))),
    );
    let spec_path = dir.path().join("spec.json");
    write_spec(&spec_path, &spec);
    let mut checked = Vec::new();
    for (c, set) in ["pro", "weat", "all"].into_iter().enumerate() {
        let texts: Vec<String> = (0..300)
            .map(|_| {
                let len = rng.random_range(1..30);
                random_text(&mut rng, &gendered, len)
            })
            .collect();
        let records = dir.path().join(format!("corpus{c}.jsonl"));
        write_records(&records, &texts);
        let cfg = mock_config(dir.path(), &records, &spec_path, set, &format!("out{c}"));
        let r = run_audit(&cfg).map_err(|e| e.to_string())?.analysis.report;
        if r.tot_all != 0.0 || r.abs_all != 0.0 || r.n_zero != r.n {
            return Err(format!(
                "set {set}: tot_all {} abs_all {} n_zero {} of {}",
                r.tot_all, r.abs_all, r.n_zero, r.n
            ));
        }
        checked.push(format!("{set} n={}", r.n));
    }
    Ok(format!("tot_all = abs_all = 0, n_zero = n for {}", checked.join(", ")))
}

fn p7_analytic_bias() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    write_spec(&spec_path, &MockScorerSpec::new(0.0, [("he".to_string(), 1.0)]));
    let expected = logistic(1.0) - logistic(0.0);
    if format!("{expected:.5}") != "0.23106" {
        return Err(format!("logistic(1) - logistic(0) = {expected}"));
    }
    let mut star_misses = Vec::new();
    for k in 1..=12 {
        let records = dir.path().join(format!("k{k}.jsonl"));
        write_records(&records, &vec!["he is here".to_string(); k]);
        let mut cfg = mock_config(dir.path(), &records, &spec_path, "pro", &format!("k{k}"));
        cfg.test_method = TestMethod::Exact;
        cfg.m_tests = Some(1);
        let record = run_audit(&cfg).map_err(|e| e.to_string())?;
        let r: &BiasReport = &record.analysis.report;
        let deltas: Vec<f64> = fs::read_to_string(cfg.out_dir.join("scores.jsonl"))
            .unwrap()
            .lines()
            .take(2 * k)
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .collect::<Vec<_>>()
            .chunks(2)
            .map(|c| c[1]["score"].as_f64().unwrap() - c[0]["score"].as_f64().unwrap())
            .collect();
        if deltas.len() != k || deltas.iter().any(|d| (d - expected).abs() > 1e-15) {
            return Err(format!("k = {k}: deltas {deltas:?}"));
        }
        if (r.tot_all - expected).abs() > 1e-15 || (r.abs_all - expected).abs() > 1e-15 {
            return Err(format!("k = {k}: tot_all {} abs_all {}", r.tot_all, r.abs_all));
        }
        if k >= 6 && r.stars != 3 {
            star_misses.push(format!("k={k}: p={:.5} stars={}", r.p_value.unwrap_or(1.0), r.stars));
        }
    }
    let summary = format!("delta = {expected:.5} on every sample, tot_all = abs_all for k = 1..=12");
    if star_misses.is_empty() {
        Ok(format!("{summary}; stars = 3 for k >= 6"))
    } else {
        Err(format!("{summary}; stars != 3 for {}", star_misses.join(", ")))
    }
}

fn p8_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gendered = vocabulary(&builtin_set(&SetName::Weat).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let texts: Vec<String> = (0..3000)
        .map(|_| {
            let len = rng.random_range(3..50);
            random_text(&mut rng, &gendered, len)
        })
        .collect();
    let records = dir.path().join("reviews.jsonl");
    write_records(&records, &texts);
    let mut reports: Vec<(String, Vec<u8>)> = Vec::new();
    for workers in [1, 4, 8] {
        for run in 0..3 {
            let out = dir.path().join(format!("w{workers}-r{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_biaslens"))
                .args(["run-all", "--jsonl"])
                .arg(&records)
                .arg("--out-dir")
                .arg(&out)
                .args(["--scorer", "mock-random:7", "--set", "weat", "--condition", "mix"])
                .args(["--workers", &workers.to_string()])
                .env_remove("BIASLENS_CONFIG")
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "run-all failed with {}: {}",
                    status.status,
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            let mut bytes = fs::read(out.join(REPORT_CSV)).unwrap();
            bytes.extend(fs::read(out.join(REPORT_MD)).unwrap());
            reports.push((format!("workers={workers} run={run}"), bytes));
        }
    }
    let differing: Vec<&str> = reports.iter().filter(|(_, b)| *b != reports[0].1).map(|(l, _)| l.as_str()).collect();
    if differing.is_empty() {
        Ok(format!("{} run-all invocations produced byte-identical reports", reports.len()))
    } else {
        Err(format!("reports differ from the first run for {}", differing.join(", ")))
    }
}

fn p9_lexicon_counts() -> Outcome {
    let sets = builtins();
    let expected = [5, 17, 341];
    let mut parts = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let report = validate(set, sets.get(i + 1));
        if report.pairs != expected[i] || !report.is_valid() {
            return Err(format!(
                "{}: {} pairs (expected {}), violations {:?}",
                report.set, report.pairs, expected[i], report.violations
            ));
        }
        parts.push(format!("{} {}", report.set, report.pairs));
    }
    let mut detail = format!("{} pairs, pro < weat < all", parts.join(" / "));
    match imdb_dir() {
        Some(dir) => {
            let (train, test) = ingest_imdb(&dir).map_err(|e| e.to_string())?;
            for (name, c) in [("train", &train), ("test", &test)] {
                let (pos, neg) = (c.count_label(Label::Positive), c.count_label(Label::Negative));
                if c.len() != 25_000 || pos != 12_500 || neg != 12_500 {
                    return Err(format!("IMDB {name}: {} docs, {pos} positive, {neg} negative", c.len()));
                }
            }
            detail.push_str("; IMDB 25000/25000, 12500 per label");
        }
        None => detail.push_str("; IMDB check skipped (BIASLENS_IMDB_DIR unset)"),
    }
    Ok(detail)
}

fn fixture(condition: ConditionKind, set: SetName, values: [f64; 4], counts: [usize; 3], p: f64, stars: u8) -> Analysis {
    let [abs_nonzero, tot_nonzero, abs_all, tot_all] = values;
    let [n_neg, n_zero, n_pos] = counts;
    Analysis {
        schema_version: SCHEMA_VERSION,
        model: "distbase".into(),
        condition,
        set,
        report: BiasReport {
            n: n_neg + n_zero + n_pos,
            tot_all,
            abs_all,
            tot_nonzero,
            abs_nonzero,
            n_neg,
            n_zero,
            n_pos,
            std: 0.01,
            median_male: 0.5,
            median_female: 0.5,
            p_value: Some(p),
            p_adjusted: Some(p),
            m_tests: Some(1),
            stars,
        },
        wilcoxon: None,
        metrics: None,
    }
}

fn p10_report_schema() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let rows = [
        fixture(
            ConditionKind::Original,
            SetName::Pro,
            [0.0021, 0.0009, 0.0014, 0.0006],
            [6085, 10216, 8699],
            1e-12,
            3,
        ),
        fixture(
            ConditionKind::Mixed,
            SetName::All,
            [0.0052, -0.0003, 0.0042, -0.0003],
            [10080, 10177, 4743],
            0.4,
            0,
        ),
    ];
    for (format, file) in [(ReportFormat::Csv, "report.csv"), (ReportFormat::Markdown, "report.md")] {
        let rendered = render_report(&rows, format).map_err(|e| e.to_string())?;
        let expected = fs::read_to_string(golden.join(file)).map_err(|e| e.to_string())?;
        if rendered != expected {
            return Err(format!("{file} differs from golden:\n{rendered}"));
        }
    }
    Ok("CSV and Markdown match the golden files byte for byte".into())
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("P1", "masking properties", p1_masking),
        ("P2", "CDA balance", p2_cda_balance),
        ("P3", "aggregate oracle", p3_aggregate_oracle),
        ("P4", "Wilcoxon exactness", p4_wilcoxon),
        ("P5", "Pearson oracle", p5_pearson),
        ("P6", "gender-blind null", p6_gender_blind),
        ("P7", "analytic bias", p7_analytic_bias),
        ("P8", "determinism", p8_determinism),
        ("P9", "lexicon counts", p9_lexicon_counts),
        ("P10", "report schema", p10_report_schema),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('P')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id:<4} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("{id:<4} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
