//! Rendering of audit results as CSV or Markdown tables.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::SetName;
use crate::stats::{stars_label, BiasReport, EvalMetrics, WilcoxonResult};
use crate::transform::ConditionKind;

/// Bumped whenever the serialized result layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of analysing one (model, condition, term set) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub schema_version: u32,
    pub model: String,
    pub condition: ConditionKind,
    pub set: SetName,
    pub report: BiasReport,
    pub wilcoxon: Option<WilcoxonResult>,
    pub metrics: Option<EvalMetrics>,
}

impl Analysis {
    /// Row label such as `original-pro`, `R-weat` or `mix-all`.
    pub fn condition_label(&self) -> String {
        format!("{}-{}", self.condition.label(), self.set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}` (expected csv or markdown)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("duplicate result for model `{model}`, condition `{condition}`")]
    DuplicateCell { model: String, condition: String },
    #[error("result for model `{model}` has schema version {found}, expected {expected}")]
    SchemaMismatch { model: String, found: u32, expected: u32 },
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

/// `0.0021` becomes `.0021`, `-0.0012` becomes `-.0012`.
fn short(x: f64) -> String {
    let s = num(x);
    if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else {
        s
    }
}

/// Groups rows by model in order of first appearance, then sorts each group
/// by term set and condition.
fn ordered(analyses: &[Analysis]) -> Result<Vec<(&str, Vec<&Analysis>)>, ReportError> {
    if analyses.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut seen = HashSet::new();
    let mut groups: Vec<(&str, Vec<&Analysis>)> = Vec::new();
    for a in analyses {
        if a.schema_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaMismatch {
                model: a.model.clone(),
                found: a.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        if !seen.insert((a.model.as_str(), a.condition, &a.set)) {
            return Err(ReportError::DuplicateCell {
                model: a.model.clone(),
                condition: a.condition_label(),
            });
        }
        match groups.iter_mut().find(|(m, _)| *m == a.model) {
            Some((_, rows)) => rows.push(a),
            None => groups.push((&a.model, vec![a])),
        }
    }
    for (_, rows) in &mut groups {
        rows.sort_by(|x, y| (x.set.rank(), &x.set, x.condition).cmp(&(y.set.rank(), &y.set, y.condition)));
    }
    Ok(groups)
}

pub fn render_report(analyses: &[Analysis], format: ReportFormat) -> Result<String, ReportError> {
    match format {
        ReportFormat::Csv => render_csv(analyses),
        ReportFormat::Markdown => render_markdown(analyses),
    }
}

const CSV_HEADER: [&str; 10] = [
    "model",
    "condition",
    "abs_nonzero",
    "tot_nonzero",
    "abs_all",
    "tot_all",
    "n_neg",
    "n_zero",
    "n_pos",
    "sign",
];

fn render_csv(analyses: &[Analysis]) -> Result<String, ReportError> {
    let groups = ordered(analyses)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (model, rows) in groups {
        for a in rows {
            let r = &a.report;
            w.write_record([
                model.to_string(),
                a.condition_label(),
                num(r.abs_nonzero),
                num(r.tot_nonzero),
                num(r.abs_all),
                num(r.tot_all),
                r.n_neg.to_string(),
                r.n_zero.to_string(),
                r.n_pos.to_string(),
                stars_label(r.stars).to_string(),
            ])
            .expect("in-memory write");
        }
    }
    let bytes = w.into_inner().expect("in-memory flush");
    Ok(String::from_utf8(bytes).expect("utf-8 input"))
}

fn row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn render_markdown(analyses: &[Analysis]) -> Result<String, ReportError> {
    let groups = ordered(analyses)?;
    let mut out = String::from("## Bias per condition\n\n");
    out.push_str(
        "| model | condition | non zero abs | non zero tot | all abs | all tot | N<0 | N=0 | N>0 | sign. |\n",
    );
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---|\n");
    for (model, rows) in &groups {
        for a in rows {
            let r = &a.report;
            out.push_str(&row(&[
                model.to_string(),
                a.condition_label(),
                num(r.abs_nonzero),
                num(r.tot_nonzero),
                num(r.abs_all),
                num(r.tot_all),
                r.n_neg.to_string(),
                r.n_zero.to_string(),
                r.n_pos.to_string(),
                stars_label(r.stars).to_string(),
            ]));
        }
    }

    out.push_str("\n## Bias grid\n\n");
    out.push_str("Non-zero means; values in parentheses are not significant.\n\n");
    let mut sets: Vec<SetName> = SetName::BUILTINS.to_vec();
    for a in analyses {
        if !sets.contains(&a.set) {
            sets.push(a.set.clone());
        }
    }
    sets.sort_by(|x, y| (x.rank(), x).cmp(&(y.rank(), y)));
    let kinds = [ConditionKind::Original, ConditionKind::Removed, ConditionKind::Mixed];
    let mut header = vec!["model".to_string(), String::new()];
    for set in &sets {
        for kind in kinds {
            let k = if kind == ConditionKind::Original { "orig." } else { kind.label() };
            header.push(format!("{set} {k}"));
        }
    }
    out.push_str(&row(&header));
    let mut rule = vec!["---".to_string(), "---".to_string()];
    rule.extend(std::iter::repeat_n("---:".to_string(), sets.len() * kinds.len()));
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for (model, rows) in &groups {
        let cells: BTreeMap<(usize, &SetName, ConditionKind), &BiasReport> = rows
            .iter()
            .map(|a| ((a.set.rank(), &a.set, a.condition), &a.report))
            .collect();
        for (i, stat) in ["abs", "tot"].into_iter().enumerate() {
            let mut line = vec![
                if i == 0 { model.to_string() } else { String::new() },
                stat.to_string(),
            ];
            for set in &sets {
                for kind in kinds {
                    line.push(match cells.get(&(set.rank(), set, kind)) {
                        None => String::new(),
                        Some(r) => {
                            let v = short(if i == 0 { r.abs_nonzero } else { r.tot_nonzero });
                            if r.stars == 0 {
                                format!("({v})")
                            } else {
                                v
                            }
                        }
                    });
                }
            }
            out.push_str(&row(&line));
        }
    }

    let with_metrics: Vec<(&str, &Analysis, &EvalMetrics)> = groups
        .iter()
        .flat_map(|(m, rows)| rows.iter().filter_map(move |a| a.metrics.as_ref().map(|e| (*m, *a, e))))
        .collect();
    if !with_metrics.is_empty() {
        out.push_str("\n## Classification performance\n\n");
        out.push_str("| model | condition | acc. | prec. | rec. | F1 |\n");
        out.push_str("|---|---|---:|---:|---:|---:|\n");
        for (model, a, e) in with_metrics {
            out.push_str(&row(&[
                model.to_string(),
                a.condition_label(),
                short(e.accuracy),
                short(e.precision),
                short(e.recall),
                short(e.f1),
            ]));
        }
    }
    Ok(out)
}
