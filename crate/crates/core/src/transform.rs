//! Data conditions: gender-homogeneous masking of test samples, term removal
//! and counterfactual augmentation of training data.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus, Review};
use crate::lexicon::{Gender, LexiconError, SetName, TermSet};

/// The female and male versions of one test sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentalPair {
    pub id: String,
    pub female_text: String,
    pub male_text: String,
    pub n_substitutions_female: usize,
    pub n_substitutions_male: usize,
}

/// How training data was treated with respect to a term set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Condition {
    Original,
    Removed(SetName),
    Mixed(SetName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Original,
    #[serde(rename = "R")]
    Removed,
    #[serde(rename = "mix")]
    Mixed,
}

impl ConditionKind {
    pub fn label(self) -> &'static str {
        match self {
            ConditionKind::Original => "original",
            ConditionKind::Removed => "R",
            ConditionKind::Mixed => "mix",
        }
    }

    pub fn with_set(self, set: SetName) -> Condition {
        match self {
            ConditionKind::Original => Condition::Original,
            ConditionKind::Removed => Condition::Removed(set),
            ConditionKind::Mixed => Condition::Mixed(set),
        }
    }
}

impl FromStr for ConditionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" | "orig" => Ok(ConditionKind::Original),
            "R" | "r" | "removed" => Ok(ConditionKind::Removed),
            "mix" | "mixed" => Ok(ConditionKind::Mixed),
            other => Err(format!("unknown condition `{other}` (expected original, R or mix)")),
        }
    }
}

impl Condition {
    pub fn kind(&self) -> ConditionKind {
        match self {
            Condition::Original => ConditionKind::Original,
            Condition::Removed(_) => ConditionKind::Removed,
            Condition::Mixed(_) => ConditionKind::Mixed,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Original => f.write_str("original"),
            Condition::Removed(set) => write!(f, "R-{set}"),
            Condition::Mixed(set) => write!(f, "mix-{set}"),
        }
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            return Ok(Condition::Original);
        }
        let set = |rest: &str| rest.parse::<SetName>().map_err(|e: LexiconError| e.to_string());
        if let Some(rest) = s.strip_prefix("R-") {
            Ok(Condition::Removed(set(rest)?))
        } else if let Some(rest) = s.strip_prefix("mix-") {
            Ok(Condition::Mixed(set(rest)?))
        } else {
            Err(format!("unknown condition `{s}`"))
        }
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Condition {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Replaces every token that has a rule toward `target`. Returns the new text
/// and the number of substituted tokens.
pub fn mask_to_gender(text: &str, set: &TermSet, target: Gender) -> (String, usize) {
    let mut count = 0;
    let masked: Vec<&str> = tokenize(text)
        .into_iter()
        .map(|token| match set.lookup(token, target) {
            Some(replacement) => {
                count += 1;
                replacement
            }
            None => token,
        })
        .collect();
    (masked.join(" "), count)
}

pub fn make_pair(review: &Review, set: &TermSet) -> ExperimentalPair {
    let (female_text, n_substitutions_female) = mask_to_gender(&review.text, set, Gender::Female);
    let (male_text, n_substitutions_male) = mask_to_gender(&review.text, set, Gender::Male);
    ExperimentalPair {
        id: review.id.clone(),
        female_text,
        male_text,
        n_substitutions_female,
        n_substitutions_male,
    }
}

/// Pairs for every review, in corpus (id) order.
pub fn make_pairs(corpus: &Corpus, set: &TermSet) -> Vec<ExperimentalPair> {
    corpus.reviews.par_iter().map(|r| make_pair(r, set)).collect()
}

/// Deletes every token that is the source of any rule. May return "".
pub fn remove_terms(text: &str, set: &TermSet) -> String {
    tokenize(text)
        .into_iter()
        .filter(|token| !set.is_source(token))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Doubles the corpus: each review yields a male (`<id>#m`) and a female
/// (`<id>#f`) version with the same label, rating and split.
pub fn cda_augment(corpus: &Corpus, set: &TermSet) -> Corpus {
    let mut reviews: Vec<Review> = corpus
        .reviews
        .par_iter()
        .flat_map_iter(|review| {
            let pair = make_pair(review, set);
            let child = |suffix: &str, text: String| Review {
                id: format!("{}#{suffix}", review.id),
                text,
                raw_text: None,
                ..review.clone()
            };
            [child("f", pair.female_text), child("m", pair.male_text)]
        })
        .collect();
    reviews.sort_by(|a, b| a.id.cmp(&b.id));
    Corpus {
        reviews,
        condition_label: format!("mix-{}", set.name()),
        provenance: corpus.provenance.clone(),
    }
}

/// Applies a training condition. `set` is ignored for the original condition.
pub fn prepare_training(corpus: &Corpus, condition: &Condition, set: &TermSet) -> Corpus {
    match condition {
        Condition::Original => Corpus {
            condition_label: condition.to_string(),
            ..corpus.clone()
        },
        Condition::Removed(_) => {
            let reviews: Vec<Review> = corpus
                .reviews
                .par_iter()
                .map(|review| Review {
                    text: remove_terms(&review.text, set),
                    ..review.clone()
                })
                .collect();
            let empty = reviews.iter().filter(|r| r.text.is_empty()).count();
            if empty > 0 {
                log::warn!("{empty} reviews are empty after removing `{}` terms", set.name());
            }
            Corpus {
                reviews,
                condition_label: condition.to_string(),
                provenance: corpus.provenance.clone(),
            }
        }
        Condition::Mixed(_) => Corpus {
            condition_label: condition.to_string(),
            ..cda_augment(corpus, set)
        },
    }
}
