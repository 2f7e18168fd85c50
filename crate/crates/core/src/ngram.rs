//! Contiguous n-gram extraction over pruned token streams and mergeable
//! count profiles. N-grams never cross post boundaries and carry no padding.

use std::collections::HashMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{Token, TokenKind};

pub const DEFAULT_N_MAX: usize = 3;

/// Separator used between grams in exported CSV (SYMBOL FOR UNIT SEPARATOR).
pub const GRAM_SEPARATOR: char = '\u{241F}';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NGramError {
    #[error("bad-n")]
    BadN,
    #[error("owner-mismatch")]
    OwnerMismatch,
    #[error("bucket-mismatch")]
    BucketMismatch,
}

/// One token as it appears inside an n-gram. The kind is part of identity,
/// so an emoticon and a word with the same surface never collide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gram {
    pub kind: TokenKind,
    pub surface: String,
}

impl From<&Token> for Gram {
    fn from(t: &Token) -> Self {
        Gram {
            kind: t.kind,
            surface: t.surface.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NGramKey(pub Vec<Gram>);

impl NGramKey {
    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn words<S: AsRef<str>>(surfaces: &[S]) -> Self {
        NGramKey(
            surfaces
                .iter()
                .map(|s| Gram {
                    kind: TokenKind::Word,
                    surface: s.as_ref().to_string(),
                })
                .collect(),
        )
    }

    /// Surfaces joined with [`GRAM_SEPARATOR`].
    pub fn joined(&self) -> String {
        let mut out = String::new();
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(GRAM_SEPARATOR);
            }
            out.push_str(&g.surface);
        }
        out
    }
}

pub type NGramCounts = HashMap<NGramKey, u64>;

pub fn extract_ngrams(tokens: &[Token], n: usize) -> Result<NGramCounts, NGramError> {
    if n == 0 {
        return Err(NGramError::BadN);
    }
    let mut counts = NGramCounts::new();
    add_ngrams(&mut counts, tokens, n);
    Ok(counts)
}

fn add_ngrams(counts: &mut NGramCounts, tokens: &[Token], n: usize) {
    for window in tokens.windows(n) {
        let key = NGramKey(window.iter().map(Gram::from).collect());
        *counts.entry(key).or_insert(0) += 1;
    }
}

/// Adds every n-gram of order `1..=n_max` to `counts`.
pub(crate) fn add_all_orders(counts: &mut NGramCounts, tokens: &[Token], n_max: usize) {
    for n in 1..=n_max {
        add_ngrams(counts, tokens, n);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BucketScope {
    All,
    Bucket(NaiveDate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    pub owner: String,
    pub bucket: BucketScope,
    pub counts: NGramCounts,
    pub post_count: u64,
}

impl NGramProfile {
    pub fn new(owner: impl Into<String>, bucket: BucketScope) -> Self {
        NGramProfile {
            owner: owner.into(),
            bucket,
            counts: NGramCounts::new(),
            post_count: 0,
        }
    }

    /// Counts one post. `n_max` of zero counts the post but no n-grams.
    pub fn accumulate(&mut self, tokens: &[Token], n_max: usize) {
        add_all_orders(&mut self.counts, tokens, n_max);
        self.post_count += 1;
    }

    pub fn count(&self, key: &NGramKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Total occurrences of n-grams of order `n`.
    pub fn order_total(&self, n: usize) -> u64 {
        self.counts
            .iter()
            .filter(|(k, _)| k.n() == n)
            .map(|(_, c)| c)
            .sum()
    }

    /// Rows sorted by `(n, joined gram, kinds)`.
    pub fn sorted_rows(&self) -> Vec<(&NGramKey, u64)> {
        let mut rows: Vec<(String, &NGramKey, u64)> = self
            .counts
            .iter()
            .map(|(k, &c)| (k.joined(), k, c))
            .collect();
        rows.sort_by(|a, b| {
            a.1.n()
                .cmp(&b.1.n())
                .then_with(|| a.0.cmp(&b.0))
                .then_with(|| a.1.cmp(b.1))
        });
        rows.into_iter().map(|(_, k, c)| (k, c)).collect()
    }

    /// Writes the `n,gram,count` CSV export.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["n", "gram", "count"])?;
        for (key, count) in self.sorted_rows() {
            w.write_record([key.n().to_string(), key.joined(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn merge_profiles(a: &NGramProfile, b: &NGramProfile) -> Result<NGramProfile, NGramError> {
    let mut out = a.clone();
    merge_into(&mut out, b)?;
    Ok(out)
}

pub fn merge_into(target: &mut NGramProfile, other: &NGramProfile) -> Result<(), NGramError> {
    if target.owner != other.owner {
        return Err(NGramError::OwnerMismatch);
    }
    if target.bucket != other.bucket {
        return Err(NGramError::BucketMismatch);
    }
    for (k, &c) in &other.counts {
        *target.counts.entry(k.clone()).or_insert(0) += c;
    }
    target.post_count += other.post_count;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> Vec<Token> {
        ws.iter()
            .enumerate()
            .map(|(i, w)| Token::new(TokenKind::Word, *w, i * 2, i * 2 + 1))
            .collect()
    }

    fn counts(entries: &[(&[&str], u64)]) -> NGramCounts {
        entries
            .iter()
            .map(|(g, c)| (NGramKey::words(g), *c))
            .collect()
    }

    #[test]
    fn bigrams_of_three() {
        assert_eq!(
            extract_ngrams(&words(&["a", "b", "c"]), 2).unwrap(),
            counts(&[(&["a", "b"], 1), (&["b", "c"], 1)])
        );
    }

    #[test]
    fn repeated_unigram() {
        assert_eq!(
            extract_ngrams(&words(&["a", "a", "a"]), 1).unwrap(),
            counts(&[(&["a"], 3)])
        );
    }

    #[test]
    fn window_longer_than_list() {
        assert!(extract_ngrams(&words(&["a", "b"]), 3).unwrap().is_empty());
    }

    #[test]
    fn zero_n_rejected() {
        assert_eq!(extract_ngrams(&words(&["a"]), 0), Err(NGramError::BadN));
    }

    #[test]
    fn kind_is_part_of_the_key() {
        let toks = vec![
            Token::new(TokenKind::Word, "3", 0, 1),
            Token::new(TokenKind::Number, "3", 2, 3),
        ];
        assert_eq!(extract_ngrams(&toks, 1).unwrap().len(), 2);
    }

    #[test]
    fn accumulate_sequence() {
        let mut p = NGramProfile::new("u", BucketScope::All);
        p.accumulate(&words(&["a", "b"]), 2);
        assert_eq!(p.counts, counts(&[(&["a"], 1), (&["b"], 1), (&["a", "b"], 1)]));
        assert_eq!(p.post_count, 1);

        p.accumulate(&words(&["a"]), 2);
        assert_eq!(p.counts, counts(&[(&["a"], 2), (&["b"], 1), (&["a", "b"], 1)]));
        assert_eq!(p.post_count, 2);

        let mut empty = NGramProfile::new("u", BucketScope::All);
        empty.accumulate(&[], 3);
        assert!(empty.counts.is_empty());
        assert_eq!(empty.post_count, 1);
    }

    #[test]
    fn merge_examples() {
        let mut a = NGramProfile::new("u", BucketScope::All);
        a.counts = counts(&[(&["x"], 1)]);
        let mut b = NGramProfile::new("u", BucketScope::All);
        b.counts = counts(&[(&["x"], 2), (&["y"], 1)]);
        let ab = merge_profiles(&a, &b).unwrap();
        assert_eq!(ab.counts, counts(&[(&["x"], 3), (&["y"], 1)]));
        assert_eq!(ab, merge_profiles(&b, &a).unwrap());

        let empty = NGramProfile::new("u", BucketScope::All);
        assert_eq!(merge_profiles(&a, &empty).unwrap(), a);
    }

    #[test]
    fn merge_rejects_mismatched_scope() {
        let a = NGramProfile::new("u", BucketScope::All);
        let b = NGramProfile::new("v", BucketScope::All);
        assert_eq!(merge_profiles(&a, &b), Err(NGramError::OwnerMismatch));
        let c = NGramProfile::new("u", BucketScope::Bucket(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()));
        assert_eq!(merge_profiles(&a, &c), Err(NGramError::BucketMismatch));
    }

    #[test]
    fn csv_export_is_sorted() {
        let mut p = NGramProfile::new("u", BucketScope::All);
        p.accumulate(&words(&["b", "a"]), 2);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,gram,count\n1,a,1\n1,b,1\n2,b\u{241F}a,1\n"
        );
    }
}
