use std::collections::HashMap;

use biaslens::corpus::{tokenize, Corpus, Label, Review, Split};
use biaslens::lexicon::{builtin_set, Gender, GenderedRule, SetName, TermSet};
use biaslens::transform::{cda_augment, make_pair, mask_to_gender, remove_terms};
use proptest::prelude::*;

const NEUTRAL: [&str; 8] = ["the", "film", "was", "great", "a", "bad", "plot", "is"];

fn sets() -> Vec<TermSet> {
    SetName::BUILTINS.iter().map(|n| builtin_set(n).unwrap()).collect()
}

/// Interleavings of gendered and neutral tokens drawn from `all`.
fn text() -> impl Strategy<Value = String> {
    let all = builtin_set(&SetName::All).unwrap();
    let mut gendered: Vec<String> = all
        .rules()
        .iter()
        .flat_map(|r| [r.source.clone(), r.target.clone()])
        .collect();
    gendered.sort();
    gendered.dedup();
    let token = prop_oneof![
        prop::sample::select(gendered),
        prop::sample::select(NEUTRAL.map(String::from).to_vec()),
    ];
    prop::collection::vec(token, 0..40).prop_map(|t| t.join(" "))
}

fn review(id: &str, text: &str) -> Review {
    Review {
        id: id.into(),
        text: text.into(),
        raw_text: None,
        star_rating: None,
        label: Label::Positive,
        split: Split::Test,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn masking_invariants(text in text()) {
        for set in sets() {
            for g in [Gender::Female, Gender::Male] {
                let (once, _) = mask_to_gender(&text, &set, g);
                let (twice, n) = mask_to_gender(&once, &set, g);
                prop_assert_eq!(&twice, &once);
                prop_assert_eq!(n, 0);
                prop_assert_eq!(tokenize(&once).len(), tokenize(&text).len());
                prop_assert!(tokenize(&once).iter().all(|t| set.lookup(t, g).is_none()));
            }
        }
    }

    #[test]
    fn substitution_counts_match_changed_tokens(text in text()) {
        let set = builtin_set(&SetName::All).unwrap();
        let pair = make_pair(&review("r", &text), &set);
        let changed = |masked: &str| {
            tokenize(&text).iter().zip(tokenize(masked)).filter(|(a, b)| **a != *b).count()
        };
        prop_assert_eq!(changed(&pair.female_text), pair.n_substitutions_female);
        prop_assert_eq!(changed(&pair.male_text), pair.n_substitutions_male);
    }

    #[test]
    fn removal_leaves_no_sources(text in text()) {
        for set in sets() {
            let removed = remove_terms(&text, &set);
            prop_assert!(tokenize(&removed).iter().all(|t| !set.is_source(t)));
            prop_assert_eq!(remove_terms(&removed, &set), removed.clone());
        }
    }

    #[test]
    fn cda_balances_bidirectional_pairs(texts in prop::collection::vec(text(), 1..30)) {
        let set = bidirectional(&builtin_set(&SetName::Weat).unwrap());
        let reviews = texts.iter().enumerate().map(|(i, t)| review(&format!("r{i}"), t)).collect();
        let corpus = Corpus::new(reviews, "original", "test").unwrap();
        let mixed = cda_augment(&corpus, &set);
        prop_assert_eq!(mixed.len(), 2 * corpus.len());
        let mut counts: HashMap<&str, i64> = HashMap::new();
        for r in &mixed.reviews {
            for t in tokenize(&r.text) {
                *counts.entry(t).or_default() += 1;
            }
        }
        for rule in set.rules() {
            prop_assert_eq!(counts.get(rule.source.as_str()), counts.get(rule.target.as_str()));
        }
    }
}

/// The subset of rules that have a reverse rule.
fn bidirectional(set: &TermSet) -> TermSet {
    let rules: Vec<GenderedRule> = set.rules().iter().filter(|r| set.is_bidirectional(r)).cloned().collect();
    TermSet::from_rules(SetName::Custom("bidirectional".into()), rules).unwrap()
}
