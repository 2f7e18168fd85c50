//! Seeded synthetic wall corpus: a stationary emotion mix for every user,
//! plus a linear rise in disappointed posts for a subset of "ramped" users
//! from the ramp start through the end of the range.

use chrono::{DateTime, Datelike, Duration, Months, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::classify::EmotionClass;
use crate::ingest::RawPost;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub users: usize,
    /// The first `ramped_users` users get the disappointment ramp.
    pub ramped_users: usize,
    pub first_month: NaiveDate,
    pub months: u32,
    pub ramp_start: NaiveDate,
    pub mean_posts_per_month: f64,
    /// Stationary class probabilities, in `EmotionClass::ALL` order.
    pub mix: [f64; 5],
    /// Probability mass moved from Neutral to Disappointment by the final
    /// month of the ramp.
    pub ramp_peak: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2016,
            users: 20,
            ramped_users: 10,
            first_month: NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date"),
            months: 84,
            ramp_start: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
            mean_posts_per_month: 30.0,
            mix: [0.20, 0.12, 0.10, 0.06, 0.52],
            ramp_peak: 0.40,
        }
    }
}

pub struct SynthCorpus {
    pub posts: Vec<RawPost>,
    pub ramped: Vec<String>,
    pub control: Vec<String>,
}

const GENERAL: &[&str] = &[
    "today", "work", "coffee", "weekend", "dinner", "photo", "family", "friends", "morning",
    "city", "train", "music", "game", "movie", "school", "news", "food", "walk", "home", "week",
];
const HAPPY_FLAVOR: &[&str] = &["sunshine", "party", "great", "fun", "awesome", "holiday", "smile"];
const SAD_FLAVOR: &[&str] = &["rain", "miss", "tired", "alone", "lost", "goodbye", "sick"];
const LOVE_FLAVOR: &[&str] = &["darling", "heart", "together", "forever", "kiss", "wedding"];
const DISAPPOINTMENT_FLAVOR: &[&str] = &["delay", "broken", "again", "fail", "refund", "waiting", "worst"];

const HAPPY_EMOTICONS: &[&str] = &[":-)", ":)", "=)", ":D"];
const SAD_EMOTICONS: &[&str] = &["☹", ":-(", ":(", "=("];

fn user_id(i: usize) -> String {
    format!("user{:02}", i + 1)
}

pub fn ramped_user_ids(config: &SynthConfig) -> Vec<String> {
    (0..config.ramped_users.min(config.users)).map(user_id).collect()
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut posts = Vec::new();
    let ramp_months = months_between(config.ramp_start, last_month(config)) + 1;
    for u in 0..config.users {
        let id = user_id(u);
        let ramped = u < config.ramped_users;
        let rate = config.mean_posts_per_month * rng.gen_range(0.8..1.2);
        let volume = Poisson::new(rate).expect("positive rate");
        for m in 0..config.months {
            let month = config.first_month + Months::new(m);
            let mix = if ramped && month >= config.ramp_start {
                let step = months_between(config.ramp_start, month) + 1;
                ramped_mix(config.mix, config.ramp_peak * step as f64 / ramp_months as f64)
            } else {
                config.mix
            };
            let n = volume.sample(&mut rng) as u32;
            for _ in 0..n {
                let class = pick_class(&mut rng, &mix);
                let text = compose(&mut rng, class);
                let timestamp = random_instant_in(&mut rng, month);
                posts.push(RawPost {
                    user_id: id.clone(),
                    timestamp,
                    text,
                    source: Some("synthetic".into()),
                });
            }
        }
    }
    posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.user_id.cmp(&b.user_id)));
    let ramped = ramped_user_ids(config);
    let control = (ramped.len()..config.users).map(user_id).collect();
    SynthCorpus {
        posts,
        ramped,
        control,
    }
}

fn last_month(config: &SynthConfig) -> NaiveDate {
    config.first_month + Months::new(config.months.saturating_sub(1))
}

fn months_between(a: NaiveDate, b: NaiveDate) -> i32 {
    (b.year() - a.year()) * 12 + b.month() as i32 - a.month() as i32
}

fn ramped_mix(mut mix: [f64; 5], shift: f64) -> [f64; 5] {
    let moved = shift.min(mix[4]);
    mix[3] += moved;
    mix[4] -= moved;
    mix
}

fn pick_class(rng: &mut impl Rng, mix: &[f64; 5]) -> EmotionClass {
    let mut x = rng.gen::<f64>() * mix.iter().sum::<f64>();
    for (class, p) in EmotionClass::ALL.iter().zip(mix) {
        if x < *p {
            return *class;
        }
        x -= p;
    }
    EmotionClass::Neutral
}

fn random_instant_in(rng: &mut impl Rng, month: NaiveDate) -> DateTime<Utc> {
    let next = month + Months::new(1);
    let seconds = (next - month).num_seconds();
    let start = Utc.from_utc_datetime(&month.and_hms_opt(0, 0, 0).expect("midnight"));
    start + Duration::seconds(rng.gen_range(0..seconds))
}

fn pick<'a>(rng: &mut impl Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

/// A short post: filler words, an optional link/mention/hashtag, and the
/// class marker (emoticon or keyword) when the class has one.
fn compose(rng: &mut impl Rng, class: EmotionClass) -> String {
    let flavor = match class {
        EmotionClass::Happy => HAPPY_FLAVOR,
        EmotionClass::Sad => SAD_FLAVOR,
        EmotionClass::Love => LOVE_FLAVOR,
        EmotionClass::Disappointment => DISAPPOINTMENT_FLAVOR,
        EmotionClass::Neutral => GENERAL,
    };
    let mut words: Vec<String> = Vec::new();
    let n = rng.gen_range(3..9);
    for _ in 0..n {
        let w = if rng.gen_bool(0.45) { pick(rng, flavor) } else { pick(rng, GENERAL) };
        words.push(w.to_string());
    }
    if rng.gen_bool(0.3) {
        words.insert(rng.gen_range(0..words.len()), pick(rng, &["the", "a", "an"]).to_string());
    }
    if rng.gen_bool(0.1) {
        words.push(format!("https://example.org/p/{}", rng.gen_range(1000..9999)));
    }
    if rng.gen_bool(0.1) {
        words.insert(0, format!("@friend{}", rng.gen_range(1..50)));
    }
    if rng.gen_bool(0.05) {
        words.push(format!("#{}", pick(rng, GENERAL)));
    }
    let emoticon_style = rng.gen_bool(0.6);
    let marker = match class {
        EmotionClass::Happy if emoticon_style => Some(pick(rng, HAPPY_EMOTICONS)),
        EmotionClass::Sad if emoticon_style => Some(pick(rng, SAD_EMOTICONS)),
        EmotionClass::Love if emoticon_style => Some("<3"),
        EmotionClass::Happy => Some("happy"),
        EmotionClass::Sad => Some("sad"),
        EmotionClass::Love => Some("love"),
        EmotionClass::Disappointment => Some(pick(rng, &["disappointed", "anger"])),
        EmotionClass::Neutral => None,
    };
    if let Some(m) = marker {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, m.to_string());
    }
    let mut text = words.join(" ");
    if rng.gen_bool(0.2) {
        text.push('!');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig {
            users: 2,
            months: 6,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).posts, generate(&cfg).posts);
        let other = SynthConfig { seed: 7, ..cfg.clone() };
        assert_ne!(generate(&cfg).posts, generate(&other).posts);
    }

    #[test]
    fn default_corpus_shape() {
        let c = generate(&SynthConfig::default());
        assert!((45_000..55_000).contains(&c.posts.len()), "{}", c.posts.len());
        assert_eq!(c.ramped.len(), 10);
        assert_eq!(c.control.len(), 10);
        let first = c.posts.first().unwrap().timestamp;
        let last = c.posts.last().unwrap().timestamp;
        assert_eq!((first.year(), first.month()), (2010, 1));
        assert_eq!((last.year(), last.month()), (2016, 12));
    }

    #[test]
    fn ramp_reaches_peak_in_final_month() {
        let cfg = SynthConfig::default();
        let mix = ramped_mix(cfg.mix, cfg.ramp_peak);
        assert!((mix[3] - 0.46).abs() < 1e-12);
        assert!((mix.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(months_between(cfg.ramp_start, last_month(&cfg)) + 1, 36);
    }
}
