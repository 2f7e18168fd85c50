use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EmotionClass;
use crate::lexer::{normalize, EmoticonTable, EmoticonTableError};

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon io: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("neutral cannot be a lexicon class")]
    NeutralClass,
    #[error("{surface:?} appears in both {first} and {second}")]
    Overlap {
        surface: String,
        first: EmotionClass,
        second: EmotionClass,
    },
    #[error("bad word entry {0:?}")]
    BadWord(String),
    #[error(transparent)]
    Emoticon(#[from] EmoticonTableError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    #[serde(default)]
    pub words: BTreeSet<String>,
    #[serde(default)]
    pub emoticons: BTreeSet<String>,
}

#[derive(Deserialize)]
struct LexiconFile {
    classes: BTreeMap<String, ClassEntry>,
}

/// Per-class keyword and emoticon tables. Surfaces are disjoint across
/// classes and words are stored lowercased.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmotionLexicon {
    classes: BTreeMap<EmotionClass, ClassEntry>,
}

impl EmotionLexicon {
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text)?;
        let mut classes = BTreeMap::new();
        for (name, entry) in file.classes {
            let class: EmotionClass = name
                .parse()
                .map_err(|_| LexiconError::UnknownClass(name.clone()))?;
            if class == EmotionClass::Neutral {
                return Err(LexiconError::NeutralClass);
            }
            classes.insert(class, entry);
        }
        Self::new(classes)
    }

    pub fn new(classes: BTreeMap<EmotionClass, ClassEntry>) -> Result<Self, LexiconError> {
        let mut seen: BTreeMap<String, EmotionClass> = BTreeMap::new();
        let mut normalized = BTreeMap::new();
        for (class, entry) in classes {
            if class == EmotionClass::Neutral {
                return Err(LexiconError::NeutralClass);
            }
            let mut words = BTreeSet::new();
            for w in &entry.words {
                let w = normalize(w).to_lowercase();
                if w.is_empty() || w.chars().any(char::is_whitespace) {
                    return Err(LexiconError::BadWord(w));
                }
                words.insert(w);
            }
            let emoticons: BTreeSet<String> = entry.emoticons.iter().map(|e| normalize(e)).collect();
            for surface in words.iter().chain(emoticons.iter()) {
                if let Some(&first) = seen.get(surface) {
                    return Err(LexiconError::Overlap {
                        surface: surface.clone(),
                        first,
                        second: class,
                    });
                }
                seen.insert(surface.clone(), class);
            }
            normalized.insert(class, ClassEntry { words, emoticons });
        }
        let lexicon = EmotionLexicon {
            classes: normalized,
        };
        lexicon.emoticon_table()?;
        Ok(lexicon)
    }

    pub fn classes(&self) -> impl Iterator<Item = EmotionClass> + '_ {
        self.classes.keys().copied()
    }

    pub fn entry(&self, class: EmotionClass) -> Option<&ClassEntry> {
        self.classes.get(&class)
    }

    /// Union of every class's emoticons, in matching order.
    pub fn emoticon_table(&self) -> Result<EmoticonTable, EmoticonTableError> {
        EmoticonTable::new(self.classes.values().flat_map(|e| e.emoticons.iter()))
    }

    pub fn class_of_emoticon(&self, surface: &str) -> Option<EmotionClass> {
        self.classes
            .iter()
            .find(|(_, e)| e.emoticons.contains(surface))
            .map(|(c, _)| *c)
    }

    pub fn class_of_word(&self, surface: &str) -> Option<EmotionClass> {
        self.classes
            .iter()
            .find(|(_, e)| e.words.contains(surface))
            .map(|(c, _)| *c)
    }

    /// Stable textual form, used when hashing run configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("lexicon serializes")
    }
}
