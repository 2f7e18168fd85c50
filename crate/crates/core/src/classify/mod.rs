//! Post-level emotion labelling: the whole-post emoticon rule, keyword
//! lexicon hits, and a naive-Bayes fallback, applied as a cascade.

mod lexicon;
mod nb;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexer::{Token, TokenKind};

pub use lexicon::{ClassEntry, EmotionLexicon, LexiconError};
pub use nb::{
    expand_lexicon, features, nb_predict, train_nb, FeatureRow, ModelExport, NbModel, TrainConfig,
    TrainError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionClass {
    Happy,
    Sad,
    Love,
    Disappointment,
    Neutral,
}

impl EmotionClass {
    pub const ALL: [EmotionClass; 5] = [
        EmotionClass::Happy,
        EmotionClass::Sad,
        EmotionClass::Love,
        EmotionClass::Disappointment,
        EmotionClass::Neutral,
    ];

    /// The four evidence-bearing classes.
    pub const EMOTIONS: [EmotionClass; 4] = [
        EmotionClass::Happy,
        EmotionClass::Sad,
        EmotionClass::Love,
        EmotionClass::Disappointment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionClass::Happy => "happy",
            EmotionClass::Sad => "sad",
            EmotionClass::Love => "love",
            EmotionClass::Disappointment => "disappointment",
            EmotionClass::Neutral => "neutral",
        }
    }
}

impl fmt::Display for EmotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion class {0:?}")]
pub struct UnknownClass(pub String);

impl FromStr for EmotionClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Emoticon,
    Lexicon,
    Model,
    Neutral,
}

/// Outcome of classifying one post. `scores` holds hit counts for the rule
/// methods and posteriors when the model decided (or abstained on a tie).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostLabel {
    pub labels: BTreeSet<EmotionClass>,
    pub method: Method,
    pub scores: BTreeMap<EmotionClass, f64>,
}

impl PostLabel {
    pub fn neutral(scores: BTreeMap<EmotionClass, f64>) -> Self {
        PostLabel {
            labels: BTreeSet::from([EmotionClass::Neutral]),
            method: Method::Neutral,
            scores,
        }
    }

    pub fn has(&self, class: EmotionClass) -> bool {
        self.labels.contains(&class)
    }
}

/// Classes whose emoticons occur anywhere in the post.
pub fn emoticon_label(tokens: &[Token], lex: &EmotionLexicon) -> BTreeSet<EmotionClass> {
    emoticon_hits(tokens, lex).into_keys().collect()
}

fn emoticon_hits(tokens: &[Token], lex: &EmotionLexicon) -> BTreeMap<EmotionClass, u32> {
    let mut hits = BTreeMap::new();
    for t in tokens.iter().filter(|t| t.is(TokenKind::Emoticon)) {
        if let Some(class) = lex.class_of_emoticon(&t.surface) {
            *hits.entry(class).or_insert(0) += 1;
        }
    }
    hits
}

/// Keyword hits per class; classes without hits are absent.
pub fn lexicon_match(tokens: &[Token], lex: &EmotionLexicon) -> BTreeMap<EmotionClass, u32> {
    let mut hits = BTreeMap::new();
    for t in tokens.iter().filter(|t| t.is(TokenKind::Word)) {
        if let Some(class) = lex.class_of_word(&t.surface) {
            *hits.entry(class).or_insert(0) += 1;
        }
    }
    hits
}

fn to_scores(hits: &BTreeMap<EmotionClass, u32>) -> BTreeMap<EmotionClass, f64> {
    hits.iter().map(|(c, &n)| (*c, f64::from(n))).collect()
}

pub fn classify_post(tokens: &[Token], lex: &EmotionLexicon, model: Option<&NbModel>) -> PostLabel {
    let emoticons = emoticon_hits(tokens, lex);
    if !emoticons.is_empty() {
        return PostLabel {
            labels: emoticons.keys().copied().collect(),
            method: Method::Emoticon,
            scores: to_scores(&emoticons),
        };
    }

    let words = lexicon_match(tokens, lex);
    if let Some(&best) = words.values().max() {
        return PostLabel {
            labels: words
                .iter()
                .filter(|(_, &n)| n == best)
                .map(|(c, _)| *c)
                .collect(),
            method: Method::Lexicon,
            scores: to_scores(&words),
        };
    }

    if let Some(model) = model {
        let (log_scores, seen) = model.log_joint(tokens);
        if seen {
            let posterior = model.normalize(&log_scores);
            let best = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<EmotionClass> = model
                .classes()
                .iter()
                .zip(&log_scores)
                .filter(|(_, &s)| s == best)
                .map(|(c, _)| *c)
                .collect();
            if let [winner] = winners[..] {
                return PostLabel {
                    labels: BTreeSet::from([winner]),
                    method: Method::Model,
                    scores: posterior,
                };
            }
            return PostLabel::neutral(posterior);
        }
    }

    PostLabel::neutral(BTreeMap::new())
}
