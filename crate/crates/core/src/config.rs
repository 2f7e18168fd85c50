//! Run configuration and its stable hash.

use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classify::{EmotionLexicon, TrainConfig};
use crate::timeline::{DetectorConfig, Granularity, SeriesClass};

/// Fields that change what `analyze` produces. Only these feed the hash.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub granularity: Granularity,
    pub train: TrainConfig,
    pub lexicon: EmotionLexicon,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            granularity: Granularity::Month,
            train: TrainConfig::default(),
            lexicon: EmotionLexicon::builtin(),
        }
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    granularity: Granularity,
    n_max: usize,
    alpha: String,
    min_train_docs: usize,
    lexicon: &'a EmotionLexicon,
}

impl AnalysisConfig {
    pub fn n_max(&self) -> usize {
        self.train.n_max
    }

    /// First 16 hex digits of SHA-256 over a canonical JSON rendering.
    pub fn hash(&self) -> String {
        let input = HashInput {
            granularity: self.granularity,
            n_max: self.train.n_max,
            // Bit pattern, so 1.0 and 1.0000000000000002 differ.
            alpha: format!("{:016x}", self.train.alpha.to_bits()),
            min_train_docs: self.train.min_train_docs,
            lexicon: &self.lexicon,
        };
        let json = serde_json::to_vec(&input).expect("hash input serializes");
        Sha256::digest(json)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartOptions {
    pub class: SeriesClass,
    pub width: u32,
    pub height: u32,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            class: SeriesClass::Volume,
            width: 960,
            height: 420,
        }
    }
}

/// Everything a command might need. Store path, lexicon path, detector and
/// chart settings are not part of the analysis hash.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub store: PathBuf,
    pub lexicon_path: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub detector: DetectorConfig,
    pub chart: ChartOptions,
}

impl RunConfig {
    pub fn config_hash(&self) -> String {
        self.analysis.hash()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let base = AnalysisConfig::default();
        assert_eq!(base.hash(), AnalysisConfig::default().hash());
        assert_eq!(base.hash().len(), 16);

        let weekly = AnalysisConfig {
            granularity: Granularity::Week,
            ..base.clone()
        };
        assert_ne!(weekly.hash(), base.hash());

        let mut bigrams = base.clone();
        bigrams.train.n_max = 2;
        assert_ne!(bigrams.hash(), base.hash());

        let mut smoother = base.clone();
        smoother.train.alpha = 0.5;
        assert_ne!(smoother.hash(), base.hash());

        let lex = EmotionLexicon::from_json(r#"{"classes": {"happy": {"words": ["joy"]}}}"#).unwrap();
        let other_lex = AnalysisConfig { lexicon: lex, ..base.clone() };
        assert_ne!(other_lex.hash(), base.hash());
    }

    #[test]
    fn non_semantic_fields_do_not_move_the_hash() {
        let a = RunConfig {
            store: "a".into(),
            lexicon_path: None,
            analysis: AnalysisConfig::default(),
            detector: DetectorConfig::default(),
            chart: ChartOptions::default(),
        };
        let b = RunConfig {
            store: "b".into(),
            detector: DetectorConfig {
                z_thresh: 4.0,
                ..DetectorConfig::default()
            },
            ..a.clone()
        };
        assert_eq!(a.config_hash(), b.config_hash());
    }
}
