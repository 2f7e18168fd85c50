use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, Months, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Week,
    #[default]
    Month,
    Quarter,
    Year,
}

impl Granularity {
    /// First day of the period containing `date`. Weeks start on Monday.
    pub fn start_of(self, date: NaiveDate) -> NaiveDate {
        match self {
            Granularity::Week => {
                date - Duration::days(i64::from(date.weekday().num_days_from_monday()))
            }
            Granularity::Month => date.with_day(1).expect("day 1 exists"),
            Granularity::Quarter => {
                let month = (date.month0() / 3) * 3 + 1;
                NaiveDate::from_ymd_opt(date.year(), month, 1).expect("valid quarter start")
            }
            Granularity::Year => NaiveDate::from_ymd_opt(date.year(), 1, 1).expect("valid year start"),
        }
    }

    /// Start of the period following the one beginning at `start`.
    pub fn next(self, start: NaiveDate) -> NaiveDate {
        match self {
            Granularity::Week => start + Duration::days(7),
            Granularity::Month => start + Months::new(1),
            Granularity::Quarter => start + Months::new(3),
            Granularity::Year => start + Months::new(12),
        }
    }

    pub fn bucket_of(self, ts: &DateTime<Utc>) -> NaiveDate {
        self.start_of(ts.date_naive())
    }

    /// Contiguous period starts from the period of `first` through the
    /// period of `last`, inclusive.
    pub fn range(self, first: NaiveDate, last: NaiveDate) -> Vec<NaiveDate> {
        let end = self.start_of(last);
        let mut out = Vec::new();
        let mut cur = self.start_of(first);
        while cur <= end {
            out.push(cur);
            cur = self.next(cur);
        }
        out
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Week => "week",
            Granularity::Month => "month",
            Granularity::Quarter => "quarter",
            Granularity::Year => "year",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "week" => Ok(Granularity::Week),
            "month" => Ok(Granularity::Month),
            "quarter" => Ok(Granularity::Quarter),
            "year" => Ok(Granularity::Year),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeBucket {
    pub granularity: Granularity,
    pub start: NaiveDate,
    pub index: usize,
}

pub trait Timestamped {
    fn timestamp(&self) -> DateTime<Utc>;
}

impl Timestamped for DateTime<Utc> {
    fn timestamp(&self) -> DateTime<Utc> {
        *self
    }
}

impl Timestamped for crate::ingest::RawPost {
    fn timestamp(&self) -> DateTime<Utc> {
        self.timestamp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucketed<'a, T> {
    pub bucket: TimeBucket,
    pub items: Vec<&'a T>,
}

/// Assigns items to calendar buckets spanning the first through the last
/// item, with empty buckets in between materialized. Items keep input order
/// within a bucket.
pub fn bucketize<T: Timestamped>(items: &[T], granularity: Granularity) -> Vec<Bucketed<'_, T>> {
    let Some(first) = items.iter().map(|i| i.timestamp()).min() else {
        return Vec::new();
    };
    let last = items.iter().map(|i| i.timestamp()).max().expect("non-empty");
    let starts = granularity.range(first.date_naive(), last.date_naive());
    let mut buckets: Vec<Bucketed<'_, T>> = starts
        .iter()
        .enumerate()
        .map(|(index, &start)| Bucketed {
            bucket: TimeBucket {
                granularity,
                start,
                index,
            },
            items: Vec::new(),
        })
        .collect();
    for item in items {
        let start = granularity.bucket_of(&item.timestamp());
        let idx = starts.partition_point(|s| *s < start);
        buckets[idx].items.push(item);
    }
    buckets
}
