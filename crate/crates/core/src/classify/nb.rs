//! Multinomial naive Bayes over n-gram features, trained by distant
//! supervision from emoticon-labelled posts.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EmotionClass;
use crate::exec::Execution;
use crate::lexer::{Token, TokenKind};
use crate::ngram::{add_all_orders, NGramCounts, NGramKey};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("untrainable")]
    Untrainable,
    #[error("bad-config: {0}")]
    BadConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_max: usize,
    pub alpha: f64,
    pub min_train_docs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_max: crate::ngram::DEFAULT_N_MAX,
            alpha: 1.0,
            min_train_docs: 5,
        }
    }
}

/// Model features of a post: all n-grams up to `n_max` over the post's
/// tokens with emoticons removed. Emoticons define the training labels, so
/// they never act as evidence.
pub fn features(tokens: &[Token], n_max: usize) -> NGramCounts {
    let kept: Vec<Token> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Emoticon)
        .cloned()
        .collect();
    let mut counts = NGramCounts::new();
    add_all_orders(&mut counts, &kept, n_max);
    counts
}

fn sorted_features(tokens: &[Token], n_max: usize) -> Vec<(NGramKey, u64)> {
    let mut f: Vec<_> = features(tokens, n_max).into_iter().collect();
    f.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    classes: Vec<EmotionClass>,
    doc_counts: Vec<u64>,
    mass: Vec<u64>,
    feature_counts: HashMap<NGramKey, Vec<u64>>,
    alpha: f64,
    n_max: usize,
}

pub fn train_nb(
    docs: &[(Vec<Token>, EmotionClass)],
    config: TrainConfig,
    exec: Execution,
) -> Result<NbModel, TrainError> {
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(TrainError::BadConfig("alpha must be positive"));
    }
    if config.n_max == 0 {
        return Err(TrainError::BadConfig("n_max must be at least 1"));
    }
    let mut per_class: BTreeMap<EmotionClass, u64> = BTreeMap::new();
    for (_, class) in docs {
        *per_class.entry(*class).or_insert(0) += 1;
    }
    let classes: Vec<EmotionClass> = per_class
        .iter()
        .filter(|(c, &n)| **c != EmotionClass::Neutral && n as usize >= config.min_train_docs.max(1))
        .map(|(c, _)| *c)
        .collect();
    if classes.len() < 2 {
        return Err(TrainError::Untrainable);
    }
    let index: BTreeMap<EmotionClass, usize> =
        classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let kept: Vec<(&[Token], usize)> = docs
        .iter()
        .filter_map(|(t, c)| index.get(c).map(|&i| (t.as_slice(), i)))
        .collect();
    let doc_features = exec.map(&kept, |(tokens, i)| (*i, features(tokens, config.n_max)));

    let k = classes.len();
    let mut doc_counts = vec![0u64; k];
    let mut mass = vec![0u64; k];
    let mut feature_counts: HashMap<NGramKey, Vec<u64>> = HashMap::new();
    for (i, feats) in doc_features {
        doc_counts[i] += 1;
        for (key, c) in feats {
            mass[i] += c;
            feature_counts.entry(key).or_insert_with(|| vec![0; k])[i] += c;
        }
    }
    Ok(NbModel {
        classes,
        doc_counts,
        mass,
        feature_counts,
        alpha: config.alpha,
        n_max: config.n_max,
    })
}

impl NbModel {
    pub fn classes(&self) -> &[EmotionClass] {
        &self.classes
    }

    pub fn vocabulary_size(&self) -> usize {
        self.feature_counts.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn class_index(&self, class: EmotionClass) -> Option<usize> {
        self.classes.iter().position(|c| *c == class)
    }

    pub fn doc_count(&self, class: EmotionClass) -> u64 {
        self.class_index(class).map_or(0, |i| self.doc_counts[i])
    }

    pub fn feature_count(&self, key: &NGramKey, class: EmotionClass) -> u64 {
        match (self.feature_counts.get(key), self.class_index(class)) {
            (Some(row), Some(i)) => row[i],
            _ => 0,
        }
    }

    pub fn mass(&self, class: EmotionClass) -> u64 {
        self.class_index(class).map_or(0, |i| self.mass[i])
    }

    /// Smoothed `P(feature | class)`; `None` for unknown classes.
    pub fn likelihood(&self, key: &NGramKey, class: EmotionClass) -> Option<f64> {
        let i = self.class_index(class)?;
        let count = self.feature_counts.get(key).map_or(0, |row| row[i]);
        Some(self.smoothed(count, self.mass[i]))
    }

    fn smoothed(&self, count: u64, mass: u64) -> f64 {
        (count as f64 + self.alpha) / (mass as f64 + self.alpha * self.vocabulary_size() as f64)
    }

    /// Per-class unnormalized log posteriors, plus whether any in-vocabulary
    /// feature contributed.
    pub fn log_joint(&self, tokens: &[Token]) -> (Vec<f64>, bool) {
        let total_docs: u64 = self.doc_counts.iter().sum();
        let mut scores: Vec<f64> = self
            .doc_counts
            .iter()
            .map(|&d| (d as f64 / total_docs as f64).ln())
            .collect();
        let denominators: Vec<f64> = self
            .mass
            .iter()
            .map(|&m| (m as f64 + self.alpha * self.vocabulary_size() as f64).ln())
            .collect();
        let mut seen = false;
        for (key, occurrences) in sorted_features(tokens, self.n_max) {
            let Some(row) = self.feature_counts.get(&key) else {
                continue;
            };
            seen = true;
            for (i, score) in scores.iter_mut().enumerate() {
                *score += occurrences as f64 * ((row[i] as f64 + self.alpha).ln() - denominators[i]);
            }
        }
        (scores, seen)
    }

    pub fn predict(&self, tokens: &[Token]) -> BTreeMap<EmotionClass, f64> {
        let (scores, _) = self.log_joint(tokens);
        self.normalize(&scores)
    }

    pub(crate) fn normalize(&self, log_scores: &[f64]) -> BTreeMap<EmotionClass, f64> {
        let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        self.classes
            .iter()
            .zip(exps)
            .map(|(c, e)| (*c, e / z))
            .collect()
    }

    pub fn to_export(&self) -> ModelExport {
        let mut features: Vec<FeatureRow> = self
            .feature_counts
            .iter()
            .map(|(k, counts)| FeatureRow {
                gram: k.clone(),
                counts: counts.clone(),
            })
            .collect();
        features.sort_by(|a, b| a.gram.cmp(&b.gram));
        ModelExport {
            classes: self.classes.clone(),
            doc_counts: self.doc_counts.clone(),
            mass: self.mass.clone(),
            alpha: self.alpha,
            n_max: self.n_max,
            vocabulary_size: self.vocabulary_size(),
            features,
        }
    }

    pub fn from_export(export: ModelExport) -> Result<Self, TrainError> {
        let k = export.classes.len();
        if k < 2 || export.doc_counts.len() != k || export.mass.len() != k {
            return Err(TrainError::BadConfig("class arrays disagree"));
        }
        if export.features.iter().any(|f| f.counts.len() != k) {
            return Err(TrainError::BadConfig("feature row width"));
        }
        let feature_counts: HashMap<_, _> = export
            .features
            .into_iter()
            .map(|f| (f.gram, f.counts))
            .collect();
        if feature_counts.len() != export.vocabulary_size {
            return Err(TrainError::BadConfig("vocabulary size"));
        }
        Ok(NbModel {
            classes: export.classes,
            doc_counts: export.doc_counts,
            mass: export.mass,
            feature_counts,
            alpha: export.alpha,
            n_max: export.n_max,
        })
    }

    /// Log-odds (bits) of each feature for a class against the pooled
    /// remaining classes; keeps the top `k` scoring at least `min_score`.
    pub fn expand_lexicon(&self, k: usize, min_score: f64) -> BTreeMap<EmotionClass, Vec<(NGramKey, f64)>> {
        let total_mass: u64 = self.mass.iter().sum();
        let mut out = BTreeMap::new();
        for (i, class) in self.classes.iter().enumerate() {
            let mass_in = self.mass[i];
            let mass_out = total_mass - mass_in;
            let mut scored: Vec<(String, &NGramKey, f64)> = Vec::new();
            if k > 0 {
                for (key, row) in &self.feature_counts {
                    let c_in = row[i];
                    let c_out: u64 = row.iter().sum::<u64>() - c_in;
                    let score =
                        self.smoothed(c_in, mass_in).log2() - self.smoothed(c_out, mass_out).log2();
                    if score >= min_score {
                        scored.push((key.joined(), key, score));
                    }
                }
            }
            scored.sort_by(|a, b| {
                b.2.total_cmp(&a.2)
                    .then_with(|| a.0.cmp(&b.0))
                    .then_with(|| a.1.cmp(b.1))
            });
            scored.truncate(k);
            out.insert(
                *class,
                scored.into_iter().map(|(_, key, s)| (key.clone(), s)).collect(),
            );
        }
        out
    }
}

pub fn nb_predict(model: &NbModel, tokens: &[Token]) -> BTreeMap<EmotionClass, f64> {
    model.predict(tokens)
}

pub fn expand_lexicon(
    model: &NbModel,
    k: usize,
    min_score: f64,
) -> BTreeMap<EmotionClass, Vec<(NGramKey, f64)>> {
    model.expand_lexicon(k, min_score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub gram: NGramKey,
    pub counts: Vec<u64>,
}

/// Serializable snapshot of a trained model; feature rows sorted by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub classes: Vec<EmotionClass>,
    pub doc_counts: Vec<u64>,
    pub mass: Vec<u64>,
    pub alpha: f64,
    pub n_max: usize,
    pub vocabulary_size: usize,
    pub features: Vec<FeatureRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionClass::*;

    fn words(ws: &[&str]) -> Vec<Token> {
        ws.iter()
            .enumerate()
            .map(|(i, w)| Token::new(TokenKind::Word, *w, i * 2, i * 2 + 1))
            .collect()
    }

    fn unigram_cfg() -> TrainConfig {
        TrainConfig {
            n_max: 1,
            alpha: 1.0,
            min_train_docs: 1,
        }
    }

    fn toy() -> NbModel {
        let docs = vec![
            (words(&["great", "day"]), Happy),
            (words(&["bad", "day"]), Sad),
        ];
        train_nb(&docs, unigram_cfg(), Execution::Sequential).unwrap()
    }

    #[test]
    fn toy_likelihoods() {
        let m = toy();
        assert_eq!(m.vocabulary_size(), 3);
        let lk = |w: &str, c| m.likelihood(&NGramKey::words(&[w]), c).unwrap();
        assert_eq!(lk("great", Happy), 2.0 / 5.0);
        assert_eq!(lk("day", Happy), 2.0 / 5.0);
        assert_eq!(lk("bad", Happy), 1.0 / 5.0);
        assert_eq!(lk("bad", Sad), 2.0 / 5.0);
        assert_eq!(lk("day", Sad), 2.0 / 5.0);
        assert_eq!(lk("great", Sad), 1.0 / 5.0);
    }

    #[test]
    fn toy_posterior() {
        let p = toy().predict(&words(&["great"]));
        assert!((p[&Happy] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[&Sad] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn shared_word_gives_exact_tie() {
        let m = toy();
        let (scores, seen) = m.log_joint(&words(&["day"]));
        assert!(seen);
        assert_eq!(scores[0], scores[1]);
        assert_eq!(m.predict(&words(&["day"]))[&Happy], 0.5);
    }

    #[test]
    fn unseen_features_fall_back_to_priors() {
        let docs = vec![
            (words(&["a"]), Happy),
            (words(&["b"]), Happy),
            (words(&["c"]), Happy),
            (words(&["d"]), Sad),
        ];
        let m = train_nb(&docs, unigram_cfg(), Execution::Sequential).unwrap();
        let (_, seen) = m.log_joint(&words(&["zzz"]));
        assert!(!seen);
        let p = m.predict(&words(&["zzz"]));
        assert!((p[&Happy] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn untrainable_sets() {
        assert_eq!(
            train_nb(&[], unigram_cfg(), Execution::Sequential),
            Err(TrainError::Untrainable)
        );
        let one = vec![(words(&["x"]), Happy), (words(&["y"]), Happy)];
        assert_eq!(
            train_nb(&one, unigram_cfg(), Execution::Sequential),
            Err(TrainError::Untrainable)
        );
    }

    #[test]
    fn small_classes_are_dropped() {
        let mut docs: Vec<_> = (0..5).map(|_| (words(&["x"]), Happy)).collect();
        docs.extend((0..5).map(|_| (words(&["y"]), Sad)));
        docs.push((words(&["z"]), Love));
        let m = train_nb(&docs, TrainConfig { min_train_docs: 5, ..unigram_cfg() }, Execution::Sequential)
            .unwrap();
        assert_eq!(m.classes(), &[Happy, Sad]);
        assert_eq!(m.vocabulary_size(), 2);
    }

    #[test]
    fn emoticons_are_not_features() {
        let toks = vec![
            Token::new(TokenKind::Word, "great", 0, 5),
            Token::new(TokenKind::Emoticon, ":)", 6, 8),
            Token::new(TokenKind::Word, "day", 9, 12),
        ];
        let f = features(&toks, 2);
        assert_eq!(f.len(), 3);
        assert_eq!(f[&NGramKey::words(&["great", "day"])], 1);
    }

    #[test]
    fn expansion_scores() {
        let m = toy();
        let ex = m.expand_lexicon(50, f64::NEG_INFINITY);
        let happy: BTreeMap<_, _> = ex[&Happy].iter().cloned().collect();
        assert!((happy[&NGramKey::words(&["great"])] - 1.0).abs() < 1e-12);
        assert_eq!(happy[&NGramKey::words(&["day"])], 0.0);
        assert_eq!(ex[&Happy][0].0, NGramKey::words(&["great"]));

        let default = m.expand_lexicon(50, 1.0);
        assert_eq!(default[&Happy], vec![(NGramKey::words(&["great"]), 1.0)]);
        assert!(m.expand_lexicon(50, f64::INFINITY).values().all(Vec::is_empty));
        assert!(m.expand_lexicon(0, f64::NEG_INFINITY).values().all(Vec::is_empty));
    }

    #[test]
    fn export_round_trip() {
        let m = toy();
        let json = serde_json::to_string(&m.to_export()).unwrap();
        let back = NbModel::from_export(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
