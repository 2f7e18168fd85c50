//! Deviation detectors over per-user series: a trailing-window z-score on
//! per-class counts, and Jensen-Shannon divergence of the class mix against
//! the pooled trailing window.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use super::series::{BucketSeries, SeriesClass, SeriesTable};
use crate::classify::EmotionClass;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetectError {
    #[error("bad-window")]
    BadWindow,
    #[error("bad-threshold: {0}")]
    BadThreshold(&'static str),
    #[error("empty-distribution")]
    EmptyDistribution,
    #[error("bad-distribution")]
    BadDistribution,
    #[error("duplicate-flag")]
    DuplicateFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window: usize,
    pub z_thresh: f64,
    pub jsd_thresh: f64,
    pub min_hits: u64,
    pub min_total: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: 6,
            z_thresh: 2.0,
            jsd_thresh: 0.25,
            min_hits: 3,
            min_total: 5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.window < 2 {
            return Err(DetectError::BadWindow);
        }
        if !(self.z_thresh.is_finite() && self.z_thresh > 0.0) {
            return Err(DetectError::BadThreshold("z must be positive"));
        }
        if !(self.jsd_thresh.is_finite() && self.jsd_thresh > 0.0) {
            return Err(DetectError::BadThreshold("jsd must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Zscore,
    Jsd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub bucket: NaiveDate,
    pub signal: Signal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<EmotionClass>,
    #[serde(serialize_with = "finite_or_inf")]
    pub value: f64,
    pub threshold: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub severity: f64,
}

impl Flag {
    fn new(bucket: NaiveDate, signal: Signal, class: Option<EmotionClass>, value: f64, threshold: f64) -> Self {
        Flag {
            bucket,
            signal,
            class,
            value,
            threshold,
            severity: value / threshold,
        }
    }

    fn sort_key(&self) -> (NaiveDate, Signal, Option<EmotionClass>) {
        (self.bucket, self.signal, self.class)
    }
}

/// JSON has no infinity; the degenerate-baseline z-score is written as "inf".
fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn mean_and_sample_sd(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Flags buckets whose count sits `z_thresh` sample deviations above the
/// mean of the preceding `window` buckets. A flat baseline flags any rise
/// with an infinite score. Counts below `min_hits` are never flagged.
pub fn zscore_flags(
    series: &BucketSeries,
    window: usize,
    z_thresh: f64,
    min_hits: u64,
) -> Result<Vec<Flag>, DetectError> {
    if window < 2 {
        return Err(DetectError::BadWindow);
    }
    let class = match series.class {
        SeriesClass::Emotion(c) => Some(c),
        SeriesClass::Volume => None,
    };
    let counts = series.counts();
    let mut flags = Vec::new();
    for t in window..counts.len() {
        let count = counts[t];
        if count < min_hits {
            continue;
        }
        let (mean, sd) = mean_and_sample_sd(&counts[t - window..t]);
        let c = count as f64;
        let z = if sd > 0.0 {
            (c - mean) / sd
        } else if c > mean {
            f64::INFINITY
        } else {
            continue;
        };
        if z >= z_thresh {
            flags.push(Flag::new(series.points[t].start, Signal::Zscore, class, z, z_thresh));
        }
    }
    Ok(flags)
}

/// Base-2 Jensen-Shannon divergence; inputs are renormalized first.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64, DetectError> {
    if p.len() != q.len() || p.iter().chain(q).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(DetectError::BadDistribution);
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    if sp <= 0.0 || sq <= 0.0 {
        return Err(DetectError::EmptyDistribution);
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let (a, b) = (a / sp, b / sq);
        let m = (a + b) / 2.0;
        total += kl_term(a, m) + kl_term(b, m);
    }
    Ok((total / 2.0).clamp(0.0, 1.0))
}

fn kl_term(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / m).log2()
    }
}

/// Flags buckets whose class mix (all five classes, Neutral included)
/// diverges from the pooled mix of the preceding `window` buckets.
pub fn shift_flags(
    table: &SeriesTable,
    window: usize,
    jsd_thresh: f64,
    min_total: u64,
) -> Result<Vec<Flag>, DetectError> {
    if window < 2 {
        return Err(DetectError::BadWindow);
    }
    let rows: Vec<Vec<u64>> = EmotionClass::ALL
        .iter()
        .map(|c| {
            table
                .counts
                .get(&SeriesClass::Emotion(*c))
                .cloned()
                .unwrap_or_else(|| vec![0; table.len()])
        })
        .collect();
    let mix = |t: usize| -> Vec<f64> { rows.iter().map(|r| r[t] as f64).collect() };
    let mut flags = Vec::new();
    for t in window..table.len() {
        if table.totals[t] < min_total {
            continue;
        }
        let current = mix(t);
        let pooled: Vec<f64> = rows
            .iter()
            .map(|r| r[t - window..t].iter().sum::<u64>() as f64)
            .collect();
        let d = match jsd(&current, &pooled) {
            Ok(d) => d,
            Err(DetectError::EmptyDistribution) => continue,
            Err(e) => return Err(e),
        };
        if d >= jsd_thresh {
            flags.push(Flag::new(table.starts[t], Signal::Jsd, None, d, jsd_thresh));
        }
    }
    Ok(flags)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub user_id: String,
    pub config: DetectorConfig,
    pub flags: Vec<Flag>,
}

pub fn build_report(
    user_id: &str,
    mut flags: Vec<Flag>,
    config: DetectorConfig,
) -> Result<DeviationReport, DetectError> {
    let mut seen = HashSet::new();
    for f in &flags {
        if !seen.insert(f.sort_key()) {
            return Err(DetectError::DuplicateFlag);
        }
    }
    for f in &mut flags {
        f.severity = f.value / f.threshold;
    }
    flags.sort_by_key(|f| f.sort_key());
    Ok(DeviationReport {
        user_id: user_id.to_string(),
        config,
        flags,
    })
}

/// Runs both detectors over a user's table: z-scores on the four emotion
/// classes, then the class-mix shift.
pub fn detect(user_id: &str, table: &SeriesTable, config: DetectorConfig) -> Result<DeviationReport, DetectError> {
    config.validate()?;
    let mut flags = Vec::new();
    for class in EmotionClass::EMOTIONS {
        let series = table.series(SeriesClass::Emotion(class));
        flags.extend(zscore_flags(&series, config.window, config.z_thresh, config.min_hits)?);
    }
    flags.extend(shift_flags(table, config.window, config.jsd_thresh, config.min_total)?);
    build_report(user_id, flags, config)
}
