use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::bucket::{Bucketed, Granularity, Timestamped};
use crate::classify::{EmotionClass, PostLabel};

pub const SERIES_HEADER: [&str; 5] = ["bucket_start", "class", "count", "total", "proportion"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesClass {
    Emotion(EmotionClass),
    Volume,
}

impl SeriesClass {
    /// Every series class in export order.
    pub fn all() -> impl Iterator<Item = SeriesClass> {
        EmotionClass::ALL
            .into_iter()
            .map(SeriesClass::Emotion)
            .chain(std::iter::once(SeriesClass::Volume))
    }
}

impl fmt::Display for SeriesClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesClass::Emotion(c) => c.fmt(f),
            SeriesClass::Volume => f.write_str("volume"),
        }
    }
}

impl FromStr for SeriesClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("volume") {
            return Ok(SeriesClass::Volume);
        }
        s.parse::<EmotionClass>()
            .map(SeriesClass::Emotion)
            .map_err(|e| e.to_string())
    }
}

pub trait Labeled {
    fn label(&self) -> &PostLabel;
}

impl Labeled for PostLabel {
    fn label(&self) -> &PostLabel {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    User(String),
    AllUsers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub start: NaiveDate,
    pub count: u64,
    pub total: u64,
}

impl SeriesPoint {
    pub fn proportion(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketSeries {
    pub scope: Scope,
    pub class: SeriesClass,
    pub points: Vec<SeriesPoint>,
}

impl BucketSeries {
    pub fn counts(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.count).collect()
    }
}

/// Per-bucket count of posts carrying `class` (every post for `Volume`).
pub fn emotion_series<T>(buckets: &[Bucketed<'_, T>], class: SeriesClass, scope: Scope) -> BucketSeries
where
    T: Timestamped + Labeled,
{
    let points = buckets
        .iter()
        .map(|b| {
            let total = b.items.len() as u64;
            let count = match class {
                SeriesClass::Volume => total,
                SeriesClass::Emotion(c) => b.items.iter().filter(|i| i.label().has(c)).count() as u64,
            };
            SeriesPoint {
                start: b.bucket.start,
                count,
                total,
            }
        })
        .collect();
    BucketSeries { scope, class, points }
}

/// All series of one scope over a shared bucket range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesTable {
    pub scope: Scope,
    pub starts: Vec<NaiveDate>,
    pub totals: Vec<u64>,
    pub counts: BTreeMap<SeriesClass, Vec<u64>>,
}

impl SeriesTable {
    pub fn build<T>(buckets: &[Bucketed<'_, T>], scope: Scope) -> Self
    where
        T: Timestamped + Labeled,
    {
        let mut counts = BTreeMap::new();
        for class in SeriesClass::all() {
            counts.insert(class, emotion_series(buckets, class, scope.clone()).counts());
        }
        SeriesTable {
            scope,
            starts: buckets.iter().map(|b| b.bucket.start).collect(),
            totals: buckets.iter().map(|b| b.items.len() as u64).collect(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn series(&self, class: SeriesClass) -> BucketSeries {
        let counts = self.counts.get(&class).cloned().unwrap_or_else(|| vec![0; self.len()]);
        BucketSeries {
            scope: self.scope.clone(),
            class,
            points: self
                .starts
                .iter()
                .zip(&self.totals)
                .zip(counts)
                .map(|((&start, &total), count)| SeriesPoint { start, count, total })
                .collect(),
        }
    }

    /// Sums several tables bucket-wise over one gap-free range covering all
    /// of them.
    pub fn sum<'a>(
        tables: impl IntoIterator<Item = &'a SeriesTable>,
        scope: Scope,
        granularity: Granularity,
    ) -> SeriesTable {
        let mut by_start: BTreeMap<NaiveDate, (u64, BTreeMap<SeriesClass, u64>)> = BTreeMap::new();
        for t in tables {
            for (i, start) in t.starts.iter().enumerate() {
                let slot = by_start.entry(*start).or_default();
                slot.0 += t.totals[i];
                for (class, counts) in &t.counts {
                    *slot.1.entry(*class).or_insert(0) += counts[i];
                }
            }
        }
        if let (Some(&first), Some(&last)) = (by_start.keys().next(), by_start.keys().next_back()) {
            for start in granularity.range(first, last) {
                by_start.entry(start).or_default();
            }
        }
        let starts: Vec<NaiveDate> = by_start.keys().copied().collect();
        let totals = by_start.values().map(|v| v.0).collect();
        let counts = SeriesClass::all()
            .map(|c| {
                (
                    c,
                    by_start
                        .values()
                        .map(|v| v.1.get(&c).copied().unwrap_or(0))
                        .collect(),
                )
            })
            .collect();
        SeriesTable {
            scope,
            starts,
            totals,
            counts,
        }
    }

    /// Writes rows bucket by bucket, classes in [`SeriesClass::all`] order.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(SERIES_HEADER)?;
        for (i, start) in self.starts.iter().enumerate() {
            for (class, counts) in &self.counts {
                w.write_record([
                    start.format("%Y-%m-%d").to_string(),
                    class.to_string(),
                    counts[i].to_string(),
                    self.totals[i].to_string(),
                    format_proportion(counts[i], self.totals[i]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, scope: Scope) -> Result<SeriesTable, String> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(|e| e.to_string())?;
        if header.iter().ne(SERIES_HEADER) {
            return Err(format!("unexpected series header {header:?}"));
        }
        let mut starts: Vec<NaiveDate> = Vec::new();
        let mut totals = Vec::new();
        let mut counts: BTreeMap<SeriesClass, Vec<u64>> = BTreeMap::new();
        for row in rdr.records() {
            let row = row.map_err(|e| e.to_string())?;
            let start = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|e| e.to_string())?;
            let class: SeriesClass = row[1].parse()?;
            let count: u64 = row[2].parse().map_err(|e| format!("count: {e}"))?;
            let total: u64 = row[3].parse().map_err(|e| format!("total: {e}"))?;
            if starts.last() != Some(&start) {
                starts.push(start);
                totals.push(total);
            }
            counts.entry(class).or_default().push(count);
        }
        if counts.values().any(|c| c.len() != starts.len()) {
            return Err("ragged series table".into());
        }
        Ok(SeriesTable {
            scope,
            starts,
            totals,
            counts,
        })
    }
}

/// `count / total` with exactly six decimals, rounded half to even, computed
/// in integer arithmetic. An empty bucket formats as `0.000000`.
pub fn format_proportion(count: u64, total: u64) -> String {
    if total == 0 {
        return "0.000000".to_string();
    }
    let scaled = u128::from(count) * 1_000_000;
    let total = u128::from(total);
    let mut q = scaled / total;
    let rem = scaled % total;
    if rem * 2 > total || (rem * 2 == total && q % 2 == 1) {
        q += 1;
    }
    format!("{}.{:06}", q / 1_000_000, q % 1_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{Method, PostLabel};
    use crate::timeline::bucket::bucketize;
    use chrono::{DateTime, TimeZone, Utc};
    use std::collections::BTreeSet;
    use EmotionClass::*;

    struct P(DateTime<Utc>, PostLabel);

    impl Timestamped for P {
        fn timestamp(&self) -> DateTime<Utc> {
            self.0
        }
    }

    impl Labeled for P {
        fn label(&self) -> &PostLabel {
            &self.1
        }
    }

    fn post(day: u32, classes: &[EmotionClass]) -> P {
        P(
            Utc.with_ymd_and_hms(2015, 1, day, 0, 0, 0).unwrap(),
            PostLabel {
                labels: classes.iter().copied().collect::<BTreeSet<_>>(),
                method: Method::Lexicon,
                scores: BTreeMap::new(),
            },
        )
    }

    #[test]
    fn counting_rule() {
        let posts = vec![post(1, &[Happy]), post(2, &[Happy, Love]), post(3, &[Neutral])];
        let b = bucketize(&posts, Granularity::Month);
        let s = emotion_series(&b, SeriesClass::Emotion(Happy), Scope::AllUsers);
        assert_eq!((s.points[0].count, s.points[0].total), (2, 3));
        assert!((s.points[0].proportion() - 2.0 / 3.0).abs() < 1e-15);
        let v = emotion_series(&b, SeriesClass::Volume, Scope::AllUsers);
        assert_eq!(v.points[0].count, 3);
    }

    #[test]
    fn empty_bucket_point() {
        let p = SeriesPoint {
            start: NaiveDate::from_ymd_opt(2015, 2, 1).unwrap(),
            count: 0,
            total: 0,
        };
        assert_eq!(p.proportion(), 0.0);
        assert_eq!(format_proportion(0, 0), "0.000000");
    }

    #[test]
    fn proportion_rounding() {
        assert_eq!(format_proportion(2, 3), "0.666667");
        assert_eq!(format_proportion(1, 3), "0.333333");
        assert_eq!(format_proportion(3, 3), "1.000000");
        // 1/16 = 0.0625 exactly; 1/2_000_000 sits on a tie and rounds to even.
        assert_eq!(format_proportion(1, 16), "0.062500");
        assert_eq!(format_proportion(1, 2_000_000), "0.000000");
        assert_eq!(format_proportion(3, 2_000_000), "0.000002");
        assert_eq!(format_proportion(5, 2), "2.500000");
    }

    #[test]
    fn csv_round_trip() {
        let posts = vec![post(1, &[Happy]), post(2, &[Sad]), post(3, &[Neutral])];
        let b = bucketize(&posts, Granularity::Week);
        let table = SeriesTable::build(&b, Scope::User("u".into()));
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("bucket_start,class,count,total,proportion\n2014-12-29,happy,1,3,0.333333\n"));
        let back = SeriesTable::read_csv(buf.as_slice(), Scope::User("u".into())).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn sum_aligns_ranges() {
        let a = vec![post(1, &[Happy])];
        let mut b = vec![post(1, &[Sad])];
        b.push(P(Utc.with_ymd_and_hms(2015, 3, 1, 0, 0, 0).unwrap(), b[0].1.clone()));
        let ta = SeriesTable::build(&bucketize(&a, Granularity::Month), Scope::User("a".into()));
        let tb = SeriesTable::build(&bucketize(&b, Granularity::Month), Scope::User("b".into()));
        let all = SeriesTable::sum([&ta, &tb], Scope::AllUsers, Granularity::Month);
        assert_eq!(all.totals, vec![2, 0, 1]);
        assert_eq!(all.counts[&SeriesClass::Emotion(Sad)], vec![1, 0, 1]);

        let late = vec![P(Utc.with_ymd_and_hms(2015, 6, 1, 0, 0, 0).unwrap(), a[0].1.clone())];
        let tl = SeriesTable::build(&bucketize(&late, Granularity::Month), Scope::User("c".into()));
        let gapped = SeriesTable::sum([&ta, &tl], Scope::AllUsers, Granularity::Month);
        assert_eq!(gapped.totals, vec![1, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn series_class_names() {
        assert_eq!("volume".parse::<SeriesClass>(), Ok(SeriesClass::Volume));
        assert_eq!("love".parse::<SeriesClass>(), Ok(SeriesClass::Emotion(Love)));
        assert!("joy".parse::<SeriesClass>().is_err());
    }
}
