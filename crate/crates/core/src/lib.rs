//! Emotion profiling of timestamped social posts.
//!
//! Posts are ingested into an append-only store, tokenized with an
//! emoticon-aware lexer, labelled with a lexicon/naive-Bayes cascade, and
//! aggregated into calendar series that feed two deviation detectors.

pub mod classify;
pub mod cli;
pub mod config;
pub mod exec;
pub mod ingest;
pub mod lexer;
pub mod ngram;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod timeline;

pub use exec::Execution;
