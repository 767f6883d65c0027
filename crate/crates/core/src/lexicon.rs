//! Gendered-term substitution rules.
//!
//! A [`TermSet`] is a collection of directed rules `source -> target`, each
//! tagged with the gender of its source token. Masking a text toward a gender
//! replaces every token that has a rule pointing at that gender. Pairs may be
//! bidirectional (`he <-> she`) or one-directional (`lesbian -> gay`, with no
//! rule turning `gay` into `lesbian`).
//!
//! Files are UTF-8, one rule per line:
//!
//! ```text
//! # comment; fields are tab-separated
//! he	she	m
//! she	he	f
//! ```

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn opposite(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    fn code(self) -> &'static str {
        match self {
            Gender::Male => "m",
            Gender::Female => "f",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m" | "male" => Ok(Gender::Male),
            "f" | "female" => Ok(Gender::Female),
            other => Err(format!("unknown gender `{other}` (expected m or f)")),
        }
    }
}

/// One directed substitution. The target implicitly carries the opposite
/// gender of the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenderedRule {
    pub source: String,
    pub target: String,
    pub source_gender: Gender,
}

impl GenderedRule {
    pub fn new(source: impl Into<String>, target: impl Into<String>, source_gender: Gender) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            source_gender,
        }
    }

    pub fn target_gender(&self) -> Gender {
        self.source_gender.opposite()
    }
}

/// Name of a term set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SetName {
    Pro,
    Weat,
    All,
    Custom(String),
}

impl SetName {
    pub const BUILTINS: [SetName; 3] = [SetName::Pro, SetName::Weat, SetName::All];

    /// Position in the pro, weat, all ordering; custom sets sort after.
    pub fn rank(&self) -> usize {
        match self {
            SetName::Pro => 0,
            SetName::Weat => 1,
            SetName::All => 2,
            SetName::Custom(_) => 3,
        }
    }
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetName::Pro => f.write_str("pro"),
            SetName::Weat => f.write_str("weat"),
            SetName::All => f.write_str("all"),
            SetName::Custom(label) => write!(f, "custom:{label}"),
        }
    }
}

impl FromStr for SetName {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pro" => Ok(SetName::Pro),
            "weat" => Ok(SetName::Weat),
            "all" => Ok(SetName::All),
            _ => match s.strip_prefix("custom:") {
                Some(label) if !label.is_empty() => Ok(SetName::Custom(label.to_string())),
                _ => Err(LexiconError::UnknownSet(s.to_string())),
            },
        }
    }
}

impl From<SetName> for String {
    fn from(name: SetName) -> String {
        name.to_string()
    }
}

impl TryFrom<String> for SetName {
    type Error = LexiconError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("unknown term set `{0}` (expected pro, weat, all or custom:<label>)")]
    UnknownSet(String),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: invalid token `{token}`: must be a single lowercase word")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: duplicate rule for `{term}` toward {target_gender}")]
    DuplicateKey {
        line: usize,
        term: String,
        target_gender: Gender,
    },
    #[error("lexicon contains no rules")]
    Empty,
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Replacements {
    to_male: Option<String>,
    to_female: Option<String>,
}

/// An immutable, validated collection of rules with a lookup index.
#[derive(Debug, Clone)]
pub struct TermSet {
    name: SetName,
    rules: Vec<GenderedRule>,
    index: HashMap<String, Replacements>,
}

impl PartialEq for TermSet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.rules == other.rules
    }
}

impl TermSet {
    /// Builds a set from rules, rejecting duplicate `(source, target gender)` keys
    /// and malformed tokens. Rules are stored in canonical (sorted) order.
    pub fn from_rules(name: SetName, rules: Vec<GenderedRule>) -> Result<Self, LexiconError> {
        // Line numbers are 1-based positions in `rules` here.
        if rules.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut index: HashMap<String, Replacements> = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            let line = i + 1;
            for token in [&rule.source, &rule.target] {
                if !is_valid_token(token) {
                    return Err(LexiconError::InvalidToken {
                        line,
                        token: token.clone(),
                    });
                }
            }
            if rule.source == rule.target {
                return Err(LexiconError::MalformedRow {
                    line,
                    reason: format!("`{}` maps to itself", rule.source),
                });
            }
            let slot = index.entry(rule.source.clone()).or_default();
            let target = match rule.target_gender() {
                Gender::Male => &mut slot.to_male,
                Gender::Female => &mut slot.to_female,
            };
            if target.is_some() {
                return Err(LexiconError::DuplicateKey {
                    line,
                    term: rule.source.clone(),
                    target_gender: rule.target_gender(),
                });
            }
            *target = Some(rule.target.clone());
        }
        let mut rules = rules;
        rules.sort();
        Ok(Self { name, rules, index })
    }

    /// Parses the tab-separated rule format.
    pub fn parse(name: SetName, content: &str) -> Result<Self, LexiconError> {
        let mut rules = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in content.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() || row.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = row.split('\t').collect();
            if fields.len() != 3 {
                return Err(LexiconError::MalformedRow {
                    line,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let gender = fields[2]
                .trim()
                .parse::<Gender>()
                .map_err(|reason| LexiconError::MalformedRow { line, reason })?;
            rules.push(GenderedRule::new(fields[0], fields[1], gender));
            lines.push(line);
        }
        // Re-map rule positions to file line numbers in errors.
        Self::from_rules(name, rules).map_err(|err| match err {
            LexiconError::MalformedRow { line, reason } => LexiconError::MalformedRow {
                line: lines[line - 1],
                reason,
            },
            LexiconError::InvalidToken { line, token } => LexiconError::InvalidToken {
                line: lines[line - 1],
                token,
            },
            LexiconError::DuplicateKey {
                line,
                term,
                target_gender,
            } => LexiconError::DuplicateKey {
                line: lines[line - 1],
                term,
                target_gender,
            },
            other => other,
        })
    }

    pub fn name(&self) -> &SetName {
        &self.name
    }

    pub fn rules(&self) -> &[GenderedRule] {
        &self.rules
    }

    /// Replacement for `term` when masking toward `target`. `None` for tokens
    /// outside the set and for tokens that already carry `target`.
    pub fn lookup(&self, term: &str, target: Gender) -> Option<&str> {
        let slot = self.index.get(term)?;
        match target {
            Gender::Male => slot.to_male.as_deref(),
            Gender::Female => slot.to_female.as_deref(),
        }
    }

    fn has_rule(&self, source: &str, target: &str) -> bool {
        self.index.get(source).is_some_and(|r| {
            r.to_male.as_deref() == Some(target) || r.to_female.as_deref() == Some(target)
        })
    }

    /// True if `token` is the source of any rule.
    pub fn is_source(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.index.keys().map(String::as_str).collect()
    }

    /// Distinct unordered `{source, target}` token pairs.
    pub fn pairs(&self) -> BTreeSet<(&str, &str)> {
        self.rules
            .iter()
            .map(|r| {
                let (a, b) = (r.source.as_str(), r.target.as_str());
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    /// True if the reverse rule also exists.
    pub fn is_bidirectional(&self, rule: &GenderedRule) -> bool {
        self.lookup(&rule.target, rule.source_gender) == Some(rule.source.as_str())
    }

    /// Serializes to the rule file format; `parse` of the output reproduces the set.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# term set: {}\n", self.name);
        for rule in &self.rules {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                rule.source,
                rule.target,
                rule.source_gender.code()
            ));
        }
        out
    }
}

fn is_valid_token(token: &str) -> bool {
    !token.is_empty()
        && !token.chars().any(|c| c.is_whitespace() || c.is_uppercase())
        && token.chars().all(|c| c.is_alphanumeric())
}

/// Reads a rule file from disk.
pub fn load_lexicon(path: &Path) -> Result<TermSet, LexiconError> {
    let content = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "file".to_string());
    TermSet::parse(SetName::Custom(label), &content)
}

const PRO_TSV: &str = include_str!("../data/lexicon/pro.tsv");
const WEAT_TSV: &str = include_str!("../data/lexicon/weat.tsv");
const ALL_TSV: &str = include_str!("../data/lexicon/all.tsv");

/// One of the embedded sets.
pub fn builtin_set(name: &SetName) -> Result<TermSet, LexiconError> {
    let content = match name {
        SetName::Pro => PRO_TSV,
        SetName::Weat => WEAT_TSV,
        SetName::All => ALL_TSV,
        SetName::Custom(_) => return Err(LexiconError::UnknownSet(name.to_string())),
    };
    TermSet::parse(name.clone(), content)
}

/// Resolves `pro|weat|all|custom:<path>` to a term set. For custom sets the
/// label after `custom:` is read as a file path.
pub fn resolve_set(spec: &str) -> Result<TermSet, LexiconError> {
    match spec.parse::<SetName>()? {
        SetName::Custom(path) => load_lexicon(Path::new(&path)),
        builtin => builtin_set(&builtin),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    SelfMapping { token: String },
    InvalidToken { token: String },
    /// Token appears as male in one rule and female in another.
    InconsistentGender { token: String },
    NotNested { within: String, missing: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfMapping { token } => write!(f, "`{token}` maps to itself"),
            Violation::InvalidToken { token } => write!(f, "`{token}` is not a single lowercase word"),
            Violation::InconsistentGender { token } => {
                write!(f, "`{token}` is used as both male and female")
            }
            Violation::NotNested { within, missing } => write!(
                f,
                "sources are not a strict subset of `{within}`; missing: {}",
                missing.join(", ")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub set: String,
    pub rules: usize,
    pub pairs: usize,
    pub bidirectional: usize,
    pub one_directional: usize,
    pub terms: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Counts pairs and lists every violated invariant. When `within` is given,
/// also checks that this set's sources are a strict subset of its sources.
pub fn validate(set: &TermSet, within: Option<&TermSet>) -> ValidationReport {
    let mut violations = Vec::new();
    let mut genders: HashMap<&str, Gender> = HashMap::new();
    let mut inconsistent = BTreeSet::new();
    for rule in set.rules() {
        if rule.source == rule.target {
            violations.push(Violation::SelfMapping {
                token: rule.source.clone(),
            });
        }
        for (token, gender) in [
            (rule.source.as_str(), rule.source_gender),
            (rule.target.as_str(), rule.target_gender()),
        ] {
            if !is_valid_token(token) {
                violations.push(Violation::InvalidToken {
                    token: token.to_string(),
                });
            }
            if *genders.entry(token).or_insert(gender) != gender {
                inconsistent.insert(token.to_string());
            }
        }
    }
    violations.extend(
        inconsistent
            .into_iter()
            .map(|token| Violation::InconsistentGender { token }),
    );

    let pairs = set.pairs();
    let bidirectional = pairs
        .iter()
        .filter(|(a, b)| set.has_rule(a, b) && set.has_rule(b, a))
        .count();

    if let Some(outer) = within {
        let outer_sources = outer.sources();
        let inner_sources = set.sources();
        let missing: Vec<String> = inner_sources
            .difference(&outer_sources)
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() || inner_sources.len() == outer_sources.len() {
            violations.push(Violation::NotNested {
                within: outer.name().to_string(),
                missing,
            });
        }
    }

    ValidationReport {
        set: set.name().to_string(),
        rules: set.rules().len(),
        pairs: pairs.len(),
        bidirectional,
        one_directional: pairs.len() - bidirectional,
        terms: genders.len(),
        violations,
    }
}
