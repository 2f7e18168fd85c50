//! Calendar bucketing of labelled posts, per-class series, and deviation
//! detection over those series.

mod bucket;
mod detect;
mod series;

pub use bucket::{bucketize, Bucketed, Granularity, TimeBucket, Timestamped};
pub use detect::{
    build_report, detect, jsd, shift_flags, zscore_flags, DetectError, DetectorConfig, DeviationReport,
    Flag, Signal,
};
pub use series::{
    emotion_series, format_proportion, BucketSeries, Labeled, Scope, SeriesClass, SeriesPoint,
    SeriesTable, SERIES_HEADER,
};
