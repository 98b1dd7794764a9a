//! Corpus ingestion, splitting, filtering and synthetic fixtures.
//!
//! Labeled CSV: a `text` column plus one 0/1 column per sentiment label,
//! headed by the label name (`official report` or `official_report`).
//! Other columns are ignored. Tweet CSV: `id,date,region,text`.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analytics::{parse_date, YearMonth};
use crate::labels::{LabelVector, Sentiment, LABEL_NAMES, NUM_LABELS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: label must be 0 or 1")]
    NonBinaryLabel { row: usize, column: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("row {0}: bad date")]
    BadDate(usize),
    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),
    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("month range ends before it starts")]
    InvalidRange,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub text: String,
    pub labels: LabelVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    pub date: NaiveDate,
    pub region: String,
    pub text: String,
}

fn find_column(headers: &csv::StringRecord, wanted: &str) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(wanted))
        .ok_or_else(|| CorpusError::MissingColumn(wanted.to_string()))
}

/// Reads a labeled corpus. Row numbers in errors count data rows from 1.
pub fn load_labeled<R: Read>(source: R) -> Result<Vec<LabeledExample>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CorpusError::EmptyFile);
    }
    let text_col = find_column(&headers, "text")?;
    let mut label_cols = [0usize; NUM_LABELS];
    for s in Sentiment::ALL {
        label_cols[s.index()] = headers
            .iter()
            .position(|h| Sentiment::from_name(h) == Some(s))
            .ok_or_else(|| CorpusError::MissingColumn(s.name().to_string()))?;
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let mut bits = [false; NUM_LABELS];
        for (k, &c) in label_cols.iter().enumerate() {
            bits[k] = match rec.get(c).map(str::trim) {
                Some("1") => true,
                Some("0") => false,
                _ => {
                    return Err(CorpusError::NonBinaryLabel {
                        row,
                        column: LABEL_NAMES[k].to_string(),
                    })
                }
            };
        }
        out.push(LabeledExample {
            text: rec.get(text_col).unwrap_or("").to_string(),
            labels: LabelVector::new(bits),
        });
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Ok(out)
}

pub fn write_labeled<W: Write>(examples: &[LabeledExample], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["text"];
    header.extend(LABEL_NAMES);
    w.write_record(&header)?;
    for ex in examples {
        let mut rec = vec![ex.text.clone()];
        rec.extend(ex.labels.bits().iter().map(|&b| if b { "1" } else { "0" }.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tweet corpus in file order.
pub fn load_tweets<R: Read>(source: R) -> Result<Vec<Tweet>, CorpusError> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = [
        find_column(&headers, "id")?,
        find_column(&headers, "date")?,
        find_column(&headers, "region")?,
        find_column(&headers, "text")?,
    ];
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(cols[k]).unwrap_or("");
        let id = field(0).to_string();
        let date = parse_date(field(1)).ok_or(CorpusError::BadDate(i + 1))?;
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        out.push(Tweet {
            id,
            date,
            region: field(2).to_string(),
            text: field(3).to_string(),
        });
    }
    Ok(out)
}

pub fn write_tweets<W: Write>(tweets: &[Tweet], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "date", "region", "text"])?;
    for t in tweets {
        w.write_record([
            t.id.as_str(),
            &t.date.format("%Y-%m-%d").to_string(),
            t.region.as_str(),
            t.text.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded shuffle, then the first `floor(n * train_fraction)` items train.
pub fn split<T: Clone>(examples: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(train_fraction));
    }
    if examples.len() < 2 {
        return Err(CorpusError::TooFewExamples(examples.len()));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (examples.len() as f64 * train_fraction).floor() as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<T>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Inclusive month range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonthRange {
    start: YearMonth,
    end: YearMonth,
}

impl MonthRange {
    pub fn new(start: YearMonth, end: YearMonth) -> Result<Self, CorpusError> {
        if end < start {
            return Err(CorpusError::InvalidRange);
        }
        Ok(MonthRange { start, end })
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn end(&self) -> YearMonth {
        self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        let m = YearMonth::of(date);
        self.start <= m && m <= self.end
    }
}

/// Keeps tweets whose region tag equals `region` exactly and whose date
/// falls inside `months`. `None` disables the corresponding filter.
pub fn filter_tweets(tweets: &[Tweet], region: Option<&str>, months: Option<MonthRange>) -> Vec<Tweet> {
    tweets
        .iter()
        .filter(|t| region.map_or(true, |r| t.region == r))
        .filter(|t| months.map_or(true, |m| m.contains(t.date)))
        .cloned()
        .collect()
}

/// One planted word per label, in label order.
pub const SENTINEL_WORDS: [&str; NUM_LABELS] = [
    "hopeful",
    "grateful",
    "sympathy",
    "doomed",
    "worried",
    "heartbroken",
    "furious",
    "hoax",
    "announced",
    "unbelievable",
    "lol",
];

/// Label-neutral vocabulary for the fixture texts.
pub const FILLER_WORDS: [&str; 39] = [
    "covid", "virus", "lockdown", "india", "delhi", "mumbai", "people", "today", "news", "cases", "hospital", "mask",
    "vaccine", "doctors", "government", "home", "work", "school", "family", "city", "test", "update", "week", "day",
    "world", "health", "time", "life", "night", "market", "train", "police", "data", "report", "state", "pandemic",
    "patients", "staff", "month",
];

pub const FIXTURE_REGIONS: [&str; 3] = ["india", "maharashtra", "delhi"];

pub const MIN_FIXTURE_SIZE: usize = 10;

/// Label layout of fixture row `i`: rows with `i % 10 == 9` are unlabeled,
/// `i % 10` in {0, 3, 6} carry two labels, the rest one. The first label of
/// each labeled row cycles through the label set in order.
pub fn fixture_label_count(i: usize) -> usize {
    match i % 10 {
        9 => 0,
        0 | 3 | 6 => 2,
        _ => 1,
    }
}

/// Per-label occurrence bounds the generator guarantees for `size` rows.
pub fn fixture_label_bounds(size: usize) -> (usize, usize) {
    let labeled = (0..size).filter(|&i| fixture_label_count(i) > 0).count();
    let doubles = (0..size).filter(|&i| fixture_label_count(i) == 2).count();
    (labeled / NUM_LABELS, labeled.div_ceil(NUM_LABELS) + doubles)
}

/// Deterministic synthetic corpus: each active label plants its sentinel
/// word among random filler words. The tweet corpus reuses the same texts,
/// dated in 2020 (mostly March to September) across three regions.
///
/// Panics if `size` is below [`MIN_FIXTURE_SIZE`].
pub fn make_fixture(seed: u64, size: usize) -> (Vec<LabeledExample>, Vec<Tweet>) {
    assert!(size >= MIN_FIXTURE_SIZE, "fixture size must be at least {MIN_FIXTURE_SIZE}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = Vec::with_capacity(size);
    let mut tweets = Vec::with_capacity(size);
    let mut next_primary = 0usize;
    for i in 0..size {
        let mut active = Vec::new();
        let n_labels = fixture_label_count(i);
        if n_labels > 0 {
            active.push(next_primary % NUM_LABELS);
            next_primary += 1;
        }
        if n_labels == 2 {
            let offset = rng.gen_range(1..NUM_LABELS);
            active.push((active[0] + offset) % NUM_LABELS);
        }

        let n_filler = rng.gen_range(4..=9);
        let mut words: Vec<String> = (0..n_filler)
            .map(|_| FILLER_WORDS[rng.gen_range(0..FILLER_WORDS.len())].to_string())
            .collect();
        for &k in &active {
            let at = rng.gen_range(0..=words.len());
            let w = SENTINEL_WORDS[k];
            words.insert(at, if rng.gen_bool(0.2) { w.to_uppercase() } else { w.to_string() });
        }
        if rng.gen_bool(0.25) {
            words.push("#covid19".to_string());
        }
        if rng.gen_bool(0.15) {
            words.push(format!("https://t.co/{:06x}", rng.gen_range(0..0xffffffu32)));
        }
        let text = words.join(" ");

        let mut bits = [false; NUM_LABELS];
        for k in active {
            bits[k] = true;
        }
        labeled.push(LabeledExample {
            text: text.clone(),
            labels: LabelVector::new(bits),
        });

        let month = match i % 17 {
            5 => 2,
            11 => 10,
            _ => 3 + (i as u32 % 7),
        };
        let day = rng.gen_range(1..=28);
        tweets.push(Tweet {
            id: format!("t{i:05}"),
            date: NaiveDate::from_ymd_opt(2020, month, day).expect("valid fixture date"),
            region: FIXTURE_REGIONS[rng.gen_range(0..FIXTURE_REGIONS.len())].to_string(),
            text,
        });
    }
    (labeled, tweets)
}

/// GloVe-format vectors for every fixture word. Sentinels get well separated
/// directions; fillers are small random vectors.
pub fn fixture_embeddings(seed: u64, dim: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = String::new();
    let mut line = |word: &str, v: Vec<f64>| {
        out.push_str(word);
        for x in v {
            out.push_str(&format!(" {x:.5}"));
        }
        out.push('\n');
    };
    for w in SENTINEL_WORDS {
        line(w, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for w in FILLER_WORDS {
        line(w, (0..dim).map(|_| rng.gen_range(-0.3..0.3)).collect());
    }
    out
}
