//! Review corpora: cleaning, tokenization, label derivation and ingestion of
//! the IMDB directory layout or generic JSONL/CSV record files.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// Label implied by a 1-10 star rating: `<= 4` negative, `>= 7` positive,
    /// 5 and 6 unlabeled.
    pub fn from_rating(rating: u8) -> Option<Label> {
        match rating {
            1..=4 => Some(Label::Negative),
            7..=10 => Some(Label::Positive),
            _ => None,
        }
    }

    fn dir_name(self) -> &'static str {
        match self {
            Label::Negative => "neg",
            Label::Positive => "pos",
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "1" => Ok(Label::Positive),
            "negative" | "neg" | "0" => Ok(Label::Negative),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "negative",
            Label::Positive => "positive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_rating: Option<u8>,
    pub label: Label,
    pub split: Split,
}

/// Reviews sorted by id, plus a tag naming the data condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub reviews: Vec<Review>,
    pub condition_label: String,
    pub provenance: String,
}

impl Corpus {
    /// Sorts by id and rejects duplicate ids.
    pub fn new(
        mut reviews: Vec<Review>,
        condition_label: impl Into<String>,
        provenance: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        reviews.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = reviews.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::DuplicateId(w[0].id.clone()));
        }
        Ok(Self {
            reviews,
            condition_label: condition_label.into(),
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    /// Reviews of one split, keeping order and tags.
    pub fn split(&self, split: Split) -> Corpus {
        Corpus {
            reviews: self
                .reviews
                .iter()
                .filter(|r| r.split == split)
                .cloned()
                .collect(),
            condition_label: self.condition_label.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.reviews.iter().filter(|r| r.label == label).count()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing directory {0}")]
    MissingDirectory(PathBuf),
    #[error("{path}: file name does not match `<id>_<rating>.txt`")]
    BadFileName { path: PathBuf },
    #[error("{path}: rating {rating} is inconsistent with label `{label}`")]
    RatingLabelMismatch {
        path: String,
        rating: u8,
        label: Label,
    },
    #[error("{location}: missing required field `{field}`")]
    MissingField { location: String, field: &'static str },
    #[error("{location}: rating {rating} is in the unlabeled range 5-6 and no label is given")]
    UnlabeledRating { location: String, rating: u8 },
    #[error("{location}: {reason}")]
    InvalidRecord { location: String, reason: String },
    #[error("duplicate review id `{0}`")]
    DuplicateId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

static BREAK_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)<\s*br\s*/?\s*>").expect("valid regex"));

// ASCII punctuation plus Unicode general category P.
static PUNCTUATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[[:punct:]\p{P}]").expect("valid regex"));

/// Lowercases, strips `<br />` tags, turns every punctuation character into a
/// space and collapses whitespace. Digits are kept.
pub fn clean(raw: &str) -> String {
    let without_breaks = BREAK_TAG.replace_all(raw, " ");
    let lower = without_breaks.to_lowercase();
    let spaced = PUNCTUATION.replace_all(&lower, " ");
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits cleaned text on single spaces.
pub fn tokenize(text: &str) -> Vec<&str> {
    if text.is_empty() {
        Vec::new()
    } else {
        text.split(' ').collect()
    }
}

/// Reads `root/{train,test}/{pos,neg}/<id>_<rating>.txt` and returns
/// `(train, test)`.
pub fn ingest_imdb(root: &Path) -> Result<(Corpus, Corpus), CorpusError> {
    let mut files = Vec::new();
    for split in [Split::Train, Split::Test] {
        for label in [Label::Positive, Label::Negative] {
            let dir = root.join(split.dir_name()).join(label.dir_name());
            if !dir.is_dir() {
                return Err(CorpusError::MissingDirectory(dir));
            }
            for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
                let path = entry.map_err(io_err(&dir))?.path();
                if path.is_file() {
                    files.push((split, label, path));
                }
            }
        }
    }

    let reviews = files
        .into_par_iter()
        .map(|(split, label, path)| read_imdb_file(split, label, &path))
        .collect::<Result<Vec<_>, _>>()?;

    let provenance = format!("imdb:{}", root.display());
    let (train, test): (Vec<_>, Vec<_>) = reviews.into_iter().partition(|r| r.split == Split::Train);
    Ok((
        Corpus::new(train, "original", provenance.clone())?,
        Corpus::new(test, "original", provenance)?,
    ))
}

fn read_imdb_file(split: Split, label: Label, path: &Path) -> Result<Review, CorpusError> {
    let bad_name = || CorpusError::BadFileName {
        path: path.to_path_buf(),
    };
    if path.extension().and_then(|e| e.to_str()) != Some("txt") {
        return Err(bad_name());
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(bad_name)?;
    let (num, rating) = stem.rsplit_once('_').ok_or_else(bad_name)?;
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad_name());
    }
    let rating: u8 = rating.parse().map_err(|_| bad_name())?;
    if Label::from_rating(rating) != Some(label) {
        return Err(CorpusError::RatingLabelMismatch {
            path: path.display().to_string(),
            rating,
            label,
        });
    }
    let raw = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(Review {
        id: format!("{}/{}/{}", split.dir_name(), label.dir_name(), stem),
        text: clean(&raw),
        raw_text: Some(raw),
        star_rating: Some(rating),
        label,
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    pub fn from_path(path: &Path) -> Option<RecordFormat> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(RecordFormat::Jsonl),
            "csv" => Some(RecordFormat::Csv),
            _ => None,
        }
    }
}

/// A raw input record before label derivation.
#[derive(Debug, Clone, Default, Deserialize)]
struct Record {
    id: Option<String>,
    text: Option<String>,
    label: Option<String>,
    rating: Option<serde_json::Value>,
    split: Option<String>,
}

/// Reads generic records carrying `id`, `text` and `label` and/or `rating`.
/// Records without a `split` field are placed in the test split.
pub fn ingest_records(path: &Path, format: RecordFormat) -> Result<Corpus, CorpusError> {
    let records: Vec<(String, Record)> = match format {
        RecordFormat::Jsonl => {
            let file = fs::File::open(path).map_err(io_err(path))?;
            let mut out = Vec::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let location = format!("{}:{}", path.display(), i + 1);
                let record: Record =
                    serde_json::from_str(&line).map_err(|e| CorpusError::InvalidRecord {
                        location: location.clone(),
                        reason: e.to_string(),
                    })?;
                out.push((location, record));
            }
            out
        }
        RecordFormat::Csv => {
            let csv_err = |source| CorpusError::Csv {
                path: path.display().to_string(),
                source,
            };
            let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
            let headers = reader.headers().map_err(csv_err)?.clone();
            let col = |name: &str| headers.iter().position(|h| h.trim() == name);
            let (id, text, label, rating, split) =
                (col("id"), col("text"), col("label"), col("rating"), col("split"));
            let mut out = Vec::new();
            for (i, row) in reader.records().enumerate() {
                let row = row.map_err(csv_err)?;
                let get = |c: Option<usize>| {
                    c.and_then(|c| row.get(c))
                        .filter(|v| !v.trim().is_empty())
                        .map(str::to_string)
                };
                let record = Record {
                    id: get(id),
                    text: get(text),
                    label: get(label),
                    rating: get(rating).map(serde_json::Value::String),
                    split: get(split),
                };
                out.push((format!("{}:{}", path.display(), i + 2), record));
            }
            out
        }
    };

    let reviews = records
        .into_iter()
        .map(|(location, record)| review_from_record(&location, record))
        .collect::<Result<Vec<_>, _>>()?;
    Corpus::new(reviews, "original", format!("records:{}", path.display()))
}

fn review_from_record(location: &str, record: Record) -> Result<Review, CorpusError> {
    let missing = |field| CorpusError::MissingField {
        location: location.to_string(),
        field,
    };
    let invalid = |reason: String| CorpusError::InvalidRecord {
        location: location.to_string(),
        reason,
    };
    let id = record.id.ok_or_else(|| missing("id"))?;
    let raw = record.text.ok_or_else(|| missing("text"))?;
    let rating = match record.rating {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::Number(n)) => Some(n.to_string()),
        Some(serde_json::Value::String(s)) => Some(s),
        Some(other) => return Err(invalid(format!("rating must be a number, got {other}"))),
    };
    let rating = rating
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .ok()
                .filter(|r| (1..=10).contains(r))
                .ok_or_else(|| invalid(format!("rating `{s}` is not an integer in 1-10")))
        })
        .transpose()?;
    let explicit = record
        .label
        .map(|l| l.parse::<Label>().map_err(invalid))
        .transpose()?;

    let (label, star_rating) = match (explicit, rating) {
        (Some(label), None) => (label, None),
        (None, None) => return Err(missing("label")),
        (None, Some(r)) => match Label::from_rating(r) {
            Some(label) => (label, Some(r)),
            None => {
                return Err(CorpusError::UnlabeledRating {
                    location: location.to_string(),
                    rating: r,
                })
            }
        },
        (Some(label), Some(r)) => match Label::from_rating(r) {
            Some(derived) if derived == label => (label, Some(r)),
            // Ratings 5-6 never stay on a labeled review; the explicit label wins.
            None => (label, None),
            Some(_) => {
                return Err(CorpusError::RatingLabelMismatch {
                    path: location.to_string(),
                    rating: r,
                    label,
                })
            }
        },
    };
    let split = match record.split {
        Some(s) => s.parse::<Split>().map_err(invalid)?,
        None => Split::Test,
    };
    Ok(Review {
        id,
        text: clean(&raw),
        raw_text: Some(raw),
        star_rating,
        label,
        split,
    })
}

/// Writes reviews as JSONL in corpus order.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for review in &corpus.reviews {
        let line = serde_json::to_string(review).expect("review serializes");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads a corpus persisted by [`write_corpus`].
pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reviews = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let review: Review =
            serde_json::from_str(&line).map_err(|e| CorpusError::InvalidRecord {
                location: format!("{}:{}", path.display(), i + 1),
                reason: e.to_string(),
            })?;
        reviews.push(review);
    }
    Corpus::new(reviews, "original", format!("corpus:{}", path.display()))
}
