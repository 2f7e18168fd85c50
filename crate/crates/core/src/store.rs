//! File-backed, append-only post store.
//!
//! ```text
//! <root>/posts.jsonl                     normalized records, one per line
//! <root>/manifest.json                   record count, schema version, analysis hash
//! <root>/derived/<user>/<confighash>/    per-user analysis outputs
//! <root>/derived/%all/<confighash>/      all-users aggregate, model, summary
//! ```

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CorpusBatch, RawPost};

pub const SCHEMA_VERSION: u32 = 1;
pub const POSTS_FILE: &str = "posts.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";
pub const DERIVED_DIR: &str = "derived";
/// Directory name of the all-users scope. Never produced by [`user_dir_name`].
pub const ALL_USERS_DIR: &str = "%all";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store-io: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema-mismatch: store has version {found}, expected {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("store-corrupt: {0}")]
    Corrupt(String),
    #[error("store-locked: {0} exists")]
    Locked(PathBuf),
    #[error("store-missing: {0}")]
    Missing(PathBuf),
    #[error("not-analyzed")]
    NotAnalyzed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub record_count: u64,
    /// Configuration hash of the most recent analysis.
    #[serde(default)]
    pub config_hash: Option<String>,
    /// Record count the most recent analysis saw.
    #[serde(default)]
    pub analyzed_record_count: Option<u64>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            record_count: 0,
            config_hash: None,
            analyzed_record_count: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub written: u64,
    pub skipped: u64,
    pub record_count: u64,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Advisory single-process lock; released on drop.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl Store {
    /// Opens a store, creating the root directory if needed.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Store { root })
    }

    /// Opens an existing store directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(StoreError::Missing(root));
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn lock(&self) -> Result<StoreLock, StoreError> {
        let path = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(StoreLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(StoreError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn manifest(&self) -> Result<Manifest, StoreError> {
        let path = self.root.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let manifest: Manifest = serde_json::from_reader(BufReader::new(File::open(&path)?))
            .map_err(|e| StoreError::Corrupt(format!("manifest: {e}")))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                found: manifest.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(manifest)
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<(), StoreError> {
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.root.join(MANIFEST_FILE), text.as_bytes())
    }

    /// All stored posts in append order. Fails when the log disagrees with
    /// the manifest count.
    pub fn read_posts(&self) -> Result<Vec<RawPost>, StoreError> {
        let manifest = self.manifest()?;
        let posts = self.read_log()?;
        if posts.len() as u64 != manifest.record_count {
            return Err(StoreError::Corrupt(format!(
                "manifest counts {} records, log holds {}",
                manifest.record_count,
                posts.len()
            )));
        }
        Ok(posts)
    }

    fn read_log(&self) -> Result<Vec<RawPost>, StoreError> {
        let path = self.root.join(POSTS_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut posts = Vec::new();
        for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let post: RawPost = serde_json::from_str(&line)
                .map_err(|e| StoreError::Corrupt(format!("{POSTS_FILE}:{}: {e}", i + 1)))?;
            posts.push(post);
        }
        Ok(posts)
    }

    /// Appends the batch in order, skipping posts already present.
    pub fn append(&self, batch: &CorpusBatch) -> Result<Receipt, StoreError> {
        let mut manifest = self.manifest()?;
        let existing = self.read_posts()?;
        let mut seen: HashSet<_> = existing.iter().map(RawPost::dedupe_key).collect();
        let fresh: Vec<&RawPost> = batch
            .posts
            .iter()
            .filter(|p| seen.insert(p.dedupe_key()))
            .collect();
        let skipped = (batch.posts.len() - fresh.len()) as u64;

        if !fresh.is_empty() {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(self.root.join(POSTS_FILE))?;
            let mut out = BufWriter::new(file);
            for post in &fresh {
                serde_json::to_writer(&mut out, post).expect("post serializes");
                out.write_all(b"\n")?;
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        let written = fresh.len() as u64;
        let manifest_exists = self.root.join(MANIFEST_FILE).exists();
        if written > 0 || !manifest_exists {
            manifest.record_count += written;
            self.write_manifest(&manifest)?;
        }
        Ok(Receipt {
            written,
            skipped,
            record_count: manifest.record_count,
        })
    }

    pub fn derived_dir(&self, scope: &str, config_hash: &str) -> PathBuf {
        self.root.join(DERIVED_DIR).join(scope).join(config_hash)
    }

    pub fn user_dir(&self, user_id: &str, config_hash: &str) -> PathBuf {
        self.derived_dir(&user_dir_name(user_id), config_hash)
    }

    pub fn aggregate_dir(&self, config_hash: &str) -> PathBuf {
        self.derived_dir(ALL_USERS_DIR, config_hash)
    }

    /// Hash of the current analysis, failing when none exists or the log has
    /// grown since it ran.
    pub fn current_analysis(&self) -> Result<String, StoreError> {
        let m = self.manifest()?;
        match (&m.config_hash, m.analyzed_record_count) {
            (Some(hash), Some(n)) if n == m.record_count && self.aggregate_dir(hash).is_dir() => {
                Ok(hash.clone())
            }
            _ => Err(StoreError::NotAnalyzed),
        }
    }
}

/// Percent-encodes everything outside `[A-Za-z0-9_-]` (and a leading dot) so
/// any user id maps to one safe directory name.
pub fn user_dir_name(user_id: &str) -> String {
    let mut out = String::with_capacity(user_id.len());
    for (i, b) in user_id.bytes().enumerate() {
        let plain = b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || (b == b'.' && i > 0);
        if plain {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
