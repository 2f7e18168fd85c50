//! End-to-end analysis of stored posts: tokenize, train, label, aggregate.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::classify::{
    classify_post, emoticon_label, train_nb, EmotionClass, Method, NbModel, PostLabel, TrainError,
};
use crate::config::AnalysisConfig;
use crate::exec::Execution;
use crate::ingest::RawPost;
use crate::lexer::{prune, tokenize, Token};
use crate::ngram::{merge_into, BucketScope, NGramProfile};
use crate::store::{write_atomic, Store, StoreError};
use crate::timeline::{bucketize, Granularity, Labeled, Scope, SeriesTable, Timestamped};

pub const SERIES_FILE: &str = "series.csv";
pub const NGRAMS_FILE: &str = "ngrams.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SUMMARY_FILE: &str = "analysis.json";
const AGGREGATE_OWNER: &str = "%all";

pub struct LabeledPost<'a> {
    pub post: &'a RawPost,
    pub label: PostLabel,
}

impl Timestamped for LabeledPost<'_> {
    fn timestamp(&self) -> chrono::DateTime<chrono::Utc> {
        self.post.timestamp
    }
}

impl Labeled for LabeledPost<'_> {
    fn label(&self) -> &PostLabel {
        &self.label
    }
}

#[derive(Debug, Clone)]
pub struct UserAnalysis {
    pub user_id: String,
    pub table: SeriesTable,
    pub ngrams: NGramProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelStatus {
    Trained,
    Untrainable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub granularity: Granularity,
    pub n_max: usize,
    pub alpha: f64,
    pub min_train_docs: usize,
    pub record_count: u64,
    pub training_docs: usize,
    pub model: ModelStatus,
    pub methods: BTreeMap<Method, u64>,
    pub users: Vec<String>,
}

pub struct Analysis {
    pub summary: Summary,
    pub model: Option<NbModel>,
    pub users: Vec<UserAnalysis>,
    pub aggregate: SeriesTable,
    pub aggregate_ngrams: NGramProfile,
}

fn pruned_tokens(posts: &[RawPost], config: &AnalysisConfig, exec: Execution) -> Vec<Vec<Token>> {
    let table = config
        .lexicon
        .emoticon_table()
        .expect("validated lexicon yields a valid table");
    exec.map(posts, |p| prune(&tokenize(&p.text, &table)))
}

/// Single-class emoticon posts form the distant-supervision training set.
pub fn training_set(tokens: &[Vec<Token>], config: &AnalysisConfig) -> Vec<(Vec<Token>, EmotionClass)> {
    tokens
        .iter()
        .filter_map(|t| {
            let classes = emoticon_label(t, &config.lexicon);
            match classes.len() {
                1 => classes.into_iter().next().map(|c| (t.clone(), c)),
                _ => None,
            }
        })
        .collect()
}

pub fn analyze(posts: &[RawPost], config: &AnalysisConfig, exec: Execution) -> Analysis {
    let tokens = pruned_tokens(posts, config, exec);
    let training = training_set(&tokens, config);
    let model = match train_nb(&training, config.train, exec) {
        Ok(m) => Some(m),
        Err(TrainError::Untrainable) => None,
        Err(e) => panic!("analysis config was validated: {e}"),
    };

    let indices: Vec<usize> = (0..posts.len()).collect();
    let labels = exec.map(&indices, |&i| classify_post(&tokens[i], &config.lexicon, model.as_ref()));

    let mut methods: BTreeMap<Method, u64> = BTreeMap::new();
    for l in &labels {
        *methods.entry(l.method).or_insert(0) += 1;
    }

    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in posts.iter().enumerate() {
        by_user.entry(p.user_id.as_str()).or_default().push(i);
    }
    let groups: Vec<(&str, Vec<usize>)> = by_user.into_iter().collect();
    let users: Vec<UserAnalysis> = exec.map(&groups, |(user, idx)| {
        let labeled: Vec<LabeledPost<'_>> = idx
            .iter()
            .map(|&i| LabeledPost {
                post: &posts[i],
                label: labels[i].clone(),
            })
            .collect();
        let buckets = bucketize(&labeled, config.granularity);
        let table = SeriesTable::build(&buckets, Scope::User(user.to_string()));
        let mut ngrams = NGramProfile::new(*user, BucketScope::All);
        for &i in idx {
            ngrams.accumulate(&tokens[i], config.n_max());
        }
        UserAnalysis {
            user_id: user.to_string(),
            table,
            ngrams,
        }
    });

    let aggregate = SeriesTable::sum(users.iter().map(|u| &u.table), Scope::AllUsers, config.granularity);
    let mut aggregate_ngrams = NGramProfile::new(AGGREGATE_OWNER, BucketScope::All);
    for u in &users {
        let mut relabeled = u.ngrams.clone();
        relabeled.owner = AGGREGATE_OWNER.to_string();
        merge_into(&mut aggregate_ngrams, &relabeled).expect("same owner and scope");
    }

    let summary = Summary {
        config_hash: config.hash(),
        granularity: config.granularity,
        n_max: config.train.n_max,
        alpha: config.train.alpha,
        min_train_docs: config.train.min_train_docs,
        record_count: posts.len() as u64,
        training_docs: training.len(),
        model: if model.is_some() {
            ModelStatus::Trained
        } else {
            ModelStatus::Untrainable
        },
        methods,
        users: users.iter().map(|u| u.user_id.clone()).collect(),
    };
    Analysis {
        summary,
        model,
        users,
        aggregate,
        aggregate_ngrams,
    }
}

fn write_csv_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<(), StoreError> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| StoreError::Io(std::io::Error::other(e)))?;
    write_atomic(path, &buf)
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut buf = BufWriter::new(Vec::new());
    serde_json::to_writer_pretty(&mut buf, value).expect("derived artifacts serialize");
    let mut bytes = buf.into_inner().expect("in-memory buffer");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Writes every derived artifact and records the analysis in the manifest.
pub fn persist(store: &Store, analysis: &Analysis) -> Result<(), StoreError> {
    let hash = &analysis.summary.config_hash;
    for u in &analysis.users {
        let dir = store.user_dir(&u.user_id, hash);
        write_csv_file(&dir.join(SERIES_FILE), |b| u.table.write_csv(b))?;
        write_csv_file(&dir.join(NGRAMS_FILE), |b| u.ngrams.write_csv(b))?;
    }
    let agg = store.aggregate_dir(hash);
    write_csv_file(&agg.join(SERIES_FILE), |b| analysis.aggregate.write_csv(b))?;
    write_csv_file(&agg.join(NGRAMS_FILE), |b| analysis.aggregate_ngrams.write_csv(b))?;
    if let Some(model) = &analysis.model {
        write_json_file(&agg.join(MODEL_FILE), &model.to_export())?;
    }
    write_json_file(&agg.join(SUMMARY_FILE), &analysis.summary)?;

    let mut manifest = store.manifest()?;
    manifest.config_hash = Some(hash.clone());
    manifest.analyzed_record_count = Some(analysis.summary.record_count);
    store.write_manifest(&manifest)
}

/// What chart/detect/export need to know about a finished analysis.
#[derive(Debug, Clone, serde::Deserialize)]
pub struct AnalysisInfo {
    pub users: BTreeSet<String>,
    pub granularity: Granularity,
    pub record_count: u64,
}

pub fn load_info(store: &Store, hash: &str) -> Result<AnalysisInfo, StoreError> {
    let path = store.aggregate_dir(hash).join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))
}

pub fn load_series(store: &Store, hash: &str, scope: &Scope) -> Result<SeriesTable, StoreError> {
    let dir = match scope {
        Scope::User(u) => store.user_dir(u, hash),
        Scope::AllUsers => store.aggregate_dir(hash),
    };
    let path = dir.join(SERIES_FILE);
    let file = std::fs::File::open(&path)?;
    SeriesTable::read_csv(file, scope.clone())
        .map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn post(user: &str, month: u32, text: &str) -> RawPost {
        RawPost::new(user, Utc.with_ymd_and_hms(2015, month, 3, 9, 0, 0).unwrap(), text)
    }

    #[test]
    fn untrainable_corpus_stays_rule_based() {
        let posts = vec![post("a", 1, "happy :)"), post("a", 3, "so sad"), post("b", 2, "nothing")];
        let a = analyze(&posts, &AnalysisConfig::default(), Execution::Sequential);
        assert_eq!(a.summary.model, ModelStatus::Untrainable);
        assert!(a.model.is_none());
        assert_eq!(a.summary.users, vec!["a", "b"]);
        assert_eq!(a.users[0].table.len(), 3);
        assert_eq!(a.aggregate.totals, vec![1, 1, 1]);
        assert_eq!(a.summary.methods[&Method::Emoticon], 1);
        assert_eq!(a.summary.methods[&Method::Lexicon], 1);
        assert_eq!(a.summary.methods[&Method::Neutral], 1);
    }

    #[test]
    fn trains_when_two_classes_have_enough_docs() {
        let mut posts = Vec::new();
        for i in 0..6 {
            posts.push(post("a", 1, &format!("sunny beach {i} :)")));
            posts.push(post("a", 2, &format!("rainy office {i} :(")));
        }
        posts.push(post("a", 3, "beach"));
        let a = analyze(&posts, &AnalysisConfig::default(), Execution::Sequential);
        assert_eq!(a.summary.model, ModelStatus::Trained);
        assert_eq!(a.summary.training_docs, 12);
        assert_eq!(a.summary.methods[&Method::Model], 1);
        let happy = a.users[0].table.counts[&crate::timeline::SeriesClass::Emotion(EmotionClass::Happy)].clone();
        assert_eq!(happy, vec![6, 0, 1]);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let corpus = crate::synth::generate(&crate::synth::SynthConfig {
            users: 3,
            ramped_users: 1,
            mean_posts_per_month: 6.0,
            ..crate::synth::SynthConfig::default()
        });
        let cfg = AnalysisConfig::default();
        let s = analyze(&corpus.posts, &cfg, Execution::Sequential);
        let p = analyze(&corpus.posts, &cfg, Execution::Parallel);
        assert_eq!(s.aggregate, p.aggregate);
        assert_eq!(s.aggregate_ngrams, p.aggregate_ngrams);
        assert_eq!(s.model, p.model);
    }
}
