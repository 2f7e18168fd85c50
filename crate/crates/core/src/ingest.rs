//! Corpus file parsing (JSONL and CSV) into validated, deduplicated posts.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub user_id: String,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Identity used for deduplication: same author, same instant, same text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DedupeKey {
    user_id: String,
    timestamp: DateTime<Utc>,
    text_hash: [u8; 32],
}

impl RawPost {
    pub fn new(user_id: impl Into<String>, timestamp: DateTime<Utc>, text: impl Into<String>) -> Self {
        RawPost {
            user_id: user_id.into(),
            timestamp,
            text: text.into(),
            source: None,
        }
    }

    pub fn dedupe_key(&self) -> DedupeKey {
        DedupeKey {
            user_id: self.user_id.clone(),
            timestamp: self.timestamp,
            text_hash: Sha256::digest(self.text.as_bytes()).into(),
        }
    }
}

/// Canonical timestamp text: RFC 3339 in UTC with a `Z` suffix and only as
/// many fractional digits as needed.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

mod rfc3339 {
    use chrono::{DateTime, Utc};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_timestamp(&text).ok_or_else(|| D::Error::custom("bad-timestamp"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Rejection {
    MissingField(&'static str),
    BadTimestamp,
    Malformed,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::MissingField(name) => write!(f, "missing-field:{name}"),
            Rejection::BadTimestamp => f.write_str("bad-timestamp"),
            Rejection::Malformed => f.write_str("malformed"),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses one record. CSV input is a single data row with columns in the
/// canonical `user_id,timestamp,text[,source]` order.
pub fn parse_post_record(raw: &str, format: Format) -> Result<RawPost, Rejection> {
    match format {
        Format::Jsonl => parse_json_line(raw),
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(raw.as_bytes());
            let mut record = csv::StringRecord::new();
            match reader.read_record(&mut record) {
                Ok(true) => parse_csv_record(&record, &CsvColumns::CANONICAL),
                _ => Err(Rejection::Malformed),
            }
        }
    }
}

fn parse_json_line(raw: &str) -> Result<RawPost, Rejection> {
    let value: Value = serde_json::from_str(raw).map_err(|_| Rejection::Malformed)?;
    let Value::Object(map) = value else {
        return Err(Rejection::Malformed);
    };
    let field = |name: &'static str| -> Result<Option<&str>, Rejection> {
        match map.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Rejection::Malformed),
        }
    };
    let user_id = field("user_id")?;
    let timestamp = field("timestamp")?;
    let text = field("text")?;
    let source = field("source")?;
    build_post(user_id, timestamp, text, source)
}

fn build_post(
    user_id: Option<&str>,
    timestamp: Option<&str>,
    text: Option<&str>,
    source: Option<&str>,
) -> Result<RawPost, Rejection> {
    let user_id = user_id
        .filter(|u| !u.trim().is_empty())
        .ok_or(Rejection::MissingField("user_id"))?;
    let timestamp = timestamp
        .filter(|t| !t.trim().is_empty())
        .ok_or(Rejection::MissingField("timestamp"))?;
    let text = text.ok_or(Rejection::MissingField("text"))?;
    let timestamp = parse_timestamp(timestamp).ok_or(Rejection::BadTimestamp)?;
    Ok(RawPost {
        user_id: user_id.to_string(),
        timestamp,
        text: text.to_string(),
        source: source.filter(|s| !s.is_empty()).map(str::to_string),
    })
}

/// Column positions located from a CSV header row.
#[derive(Debug, Clone, Copy)]
pub struct CsvColumns {
    user_id: Option<usize>,
    timestamp: Option<usize>,
    text: Option<usize>,
    source: Option<usize>,
}

impl CsvColumns {
    const CANONICAL: CsvColumns = CsvColumns {
        user_id: Some(0),
        timestamp: Some(1),
        text: Some(2),
        source: Some(3),
    };

    pub fn from_header(header: &csv::StringRecord) -> Self {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        CsvColumns {
            user_id: find("user_id"),
            timestamp: find("timestamp"),
            text: find("text"),
            source: find("source"),
        }
    }
}

fn parse_csv_record(record: &csv::StringRecord, cols: &CsvColumns) -> Result<RawPost, Rejection> {
    let get = |idx: Option<usize>| idx.and_then(|i| record.get(i));
    build_post(
        get(cols.user_id),
        get(cols.timestamp),
        get(cols.text),
        get(cols.source),
    )
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusBatch {
    pub posts: Vec<RawPost>,
    /// `(line number, reason)`, 1-based; CSV line numbers count the header.
    pub rejected: Vec<(usize, Rejection)>,
    pub duplicates_dropped: usize,
}

impl CorpusBatch {
    pub fn total_records(&self) -> usize {
        self.posts.len() + self.rejected.len() + self.duplicates_dropped
    }

    fn push(&mut self, seen: &mut HashSet<DedupeKey>, line: usize, parsed: Result<RawPost, Rejection>) {
        match parsed {
            Ok(post) => {
                if seen.insert(post.dedupe_key()) {
                    self.posts.push(post);
                } else {
                    self.duplicates_dropped += 1;
                }
            }
            Err(reason) => self.rejected.push((line, reason)),
        }
    }
}

pub fn load_corpus(path: &Path, format: Format) -> Result<CorpusBatch, IngestError> {
    let file = File::open(path)?;
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file)),
        Format::Csv => read_csv(file),
    }
}

pub fn read_jsonl<R: BufRead>(mut reader: R) -> Result<CorpusBatch, IngestError> {
    let mut batch = CorpusBatch::default();
    let mut seen = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let parsed = match std::str::from_utf8(&buf) {
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => parse_json_line(line.trim_end_matches(['\n', '\r'])),
            Err(_) => Err(Rejection::Malformed),
        };
        batch.push(&mut seen, line_no, parsed);
    }
    Ok(batch)
}

pub fn read_csv<R: Read>(reader: R) -> Result<CorpusBatch, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut batch = CorpusBatch::default();
    let cols = match rdr.headers() {
        Ok(h) => CsvColumns::from_header(h),
        Err(e) => return csv_failure(e).map(|_| batch),
    };
    let mut seen = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                if record.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                let line = record.position().map_or(0, |p| p.line() as usize);
                batch.push(&mut seen, line, parse_csv_record(&record, &cols));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                csv_failure(e)?;
                batch.push(&mut seen, line, Err(Rejection::Malformed));
            }
        }
    }
    Ok(batch)
}

/// IO failures abort the load; anything else is a bad row.
fn csv_failure(e: csv::Error) -> Result<(), IngestError> {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Err(IngestError::Io(io)),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn utc(y: i32, mo: u32, d: u32, h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
    }

    #[test]
    fn json_record() {
        let p = parse_post_record(
            r#"{"user_id":"u1","timestamp":"2015-03-02T10:00:00Z","text":"happy :-)"}"#,
            Format::Jsonl,
        )
        .unwrap();
        assert_eq!(p, RawPost::new("u1", utc(2015, 3, 2, 10), "happy :-)"));
    }

    #[test]
    fn json_rejections() {
        let r = |s: &str| parse_post_record(s, Format::Jsonl).unwrap_err().to_string();
        assert_eq!(r(r#"{"user_id":"u1","timestamp":"not-a-date","text":"x"}"#), "bad-timestamp");
        assert_eq!(r(r#"{"timestamp":"2015-03-02T10:00:00Z","text":"x"}"#), "missing-field:user_id");
        assert_eq!(r(r#"{"user_id":"  ","timestamp":"2015-03-02T10:00:00Z","text":"x"}"#), "missing-field:user_id");
        assert_eq!(r(r#"{"user_id":"u","text":"x"}"#), "missing-field:timestamp");
        assert_eq!(r(r#"{"user_id":"u","timestamp":"2015-03-02T10:00:00Z"}"#), "missing-field:text");
        assert_eq!(r(r#"{"user_id":7,"timestamp":"2015-03-02T10:00:00Z","text":"x"}"#), "malformed");
        assert_eq!(r("[1,2]"), "malformed");
        assert_eq!(r("{not json"), "malformed");
    }

    #[test]
    fn timestamps_without_offset_are_rejected() {
        let r = parse_post_record(r#"{"user_id":"u","timestamp":"2015-03-02T10:00:00","text":"x"}"#, Format::Jsonl);
        assert_eq!(r, Err(Rejection::BadTimestamp));
    }

    #[test]
    fn csv_row_is_normalized_to_utc() {
        let p = parse_post_record(r#"u2,2012-01-01T00:00:00+02:00,"sad day""#, Format::Csv).unwrap();
        assert_eq!(p, RawPost::new("u2", Utc.with_ymd_and_hms(2011, 12, 31, 22, 0, 0).unwrap(), "sad day"));
        assert_eq!(format_timestamp(&p.timestamp), "2011-12-31T22:00:00Z");
    }

    #[test]
    fn empty_text_is_allowed() {
        let p = parse_post_record(r#"{"user_id":"u","timestamp":"2015-03-02T10:00:00Z","text":""}"#, Format::Jsonl);
        assert_eq!(p.unwrap().text, "");
    }

    #[test]
    fn jsonl_batch_rules() {
        let line = r#"{"user_id":"u1","timestamp":"2015-03-02T10:00:00Z","text":"a"}"#;
        let other = r#"{"user_id":"u1","timestamp":"2015-03-02T10:00:00+00:00","text":"b"}"#;
        let b = read_jsonl(format!("{line}\n{other}\n\n{line}\n{{oops\n").as_bytes()).unwrap();
        assert_eq!(b.posts.len(), 2);
        assert_eq!(b.duplicates_dropped, 1);
        assert_eq!(b.rejected, vec![(5, Rejection::Malformed)]);
        assert_eq!(b.total_records(), 4);
    }

    #[test]
    fn offsets_collapse_in_dedupe() {
        let a = r#"{"user_id":"u","timestamp":"2015-03-02T10:00:00Z","text":"x"}"#;
        let b = r#"{"user_id":"u","timestamp":"2015-03-02T12:00:00+02:00","text":"x"}"#;
        let batch = read_jsonl(format!("{a}\n{b}\n").as_bytes()).unwrap();
        assert_eq!((batch.posts.len(), batch.duplicates_dropped), (1, 1));
    }

    #[test]
    fn csv_batch_with_header_and_extra_columns() {
        let text = "lang,text,user_id,timestamp\nen,\"hi, there\",u1,2015-01-01T00:00:00Z\nen,x,,2015-01-01T00:00:00Z\n";
        let b = read_csv(text.as_bytes()).unwrap();
        assert_eq!(b.posts.len(), 1);
        assert_eq!(b.posts[0].text, "hi, there");
        assert_eq!(b.rejected, vec![(3, Rejection::MissingField("user_id"))]);
    }

    #[test]
    fn csv_missing_header_column() {
        let b = read_csv("user_id,text\nu1,hello\n".as_bytes()).unwrap();
        assert_eq!(b.rejected, vec![(2, Rejection::MissingField("timestamp"))]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus(Path::new("/nonexistent/corpus.jsonl"), Format::Jsonl),
            Err(IngestError::Io(_))
        ));
    }

    #[test]
    fn stored_form_round_trips() {
        let p = RawPost::new("u", Utc.with_ymd_and_hms(2015, 3, 2, 10, 0, 0).unwrap(), "x");
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"user_id":"u","timestamp":"2015-03-02T10:00:00Z","text":"x"}"#);
        assert_eq!(serde_json::from_str::<RawPost>(&json).unwrap(), p);
    }
}
