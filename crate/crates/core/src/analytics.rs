//! Corpus and prediction analytics: n-grams, label co-occurrence, label-count
//! distribution, monthly sentiment series and the tweets-vs-cases join.
//!
//! Every table has a CSV form; [`crate::report`] renders the same CSVs to SVG.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::labels::{LabelVector, LABEL_NAMES, NUM_LABELS};
use crate::normalize::TokenSequence;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no samples to aggregate")]
    EmptyInput,
    #[error("record {0}: unparseable date")]
    UnparseableDate(String),
    #[error("no case count for {0}")]
    MissingCaseData(YearMonth),
    #[error("case file line {line}: {message}")]
    BadCaseRow { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NgramOrder {
    Bigram,
    Trigram,
}

impl NgramOrder {
    pub fn n(self) -> usize {
        match self {
            NgramOrder::Bigram => 2,
            NgramOrder::Trigram => 3,
        }
    }

    pub fn from_n(n: usize) -> Option<Self> {
        match n {
            2 => Some(NgramOrder::Bigram),
            3 => Some(NgramOrder::Trigram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramTable {
    n: usize,
    counts: BTreeMap<Vec<String>, u64>,
    total: u64,
}

impl NgramTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &BTreeMap<Vec<String>, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, gram: &[&str]) -> u64 {
        let key: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Entries by descending count, ties in lexicographic gram order.
    pub fn ranked(&self) -> Vec<(&[String], u64)> {
        let mut v: Vec<(&[String], u64)> = self.counts.iter().map(|(k, &c)| (k.as_slice(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["ngram", "count"]).expect("in-memory write");
        for (gram, count) in self.ranked() {
            w.write_record([gram.join(" "), count.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Every n-gram from a sliding window within each tweet, all counts kept.
/// Tokens in `stopwords` are removed before windowing.
pub fn ngram_counts_all(corpus: &[TokenSequence], order: NgramOrder, stopwords: Option<&HashSet<String>>) -> NgramTable {
    let n = order.n();
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    for seq in corpus {
        let tokens: Vec<&String> = seq
            .iter()
            .filter(|t| stopwords.map_or(true, |s| !s.contains(*t)))
            .collect();
        for window in tokens.windows(n) {
            *counts.entry(window.iter().map(|s| s.to_string()).collect()).or_insert(0) += 1;
        }
    }
    let total = counts.values().sum();
    NgramTable {
        n,
        counts: counts.into_iter().collect(),
        total,
    }
}

/// The `top_k` most frequent n-grams; `total` covers only the retained grams.
pub fn ngram_counts(
    corpus: &[TokenSequence],
    order: NgramOrder,
    top_k: usize,
    stopwords: Option<&HashSet<String>>,
) -> NgramTable {
    let all = ngram_counts_all(corpus, order, stopwords);
    let counts: BTreeMap<Vec<String>, u64> = all
        .ranked()
        .into_iter()
        .take(top_k)
        .map(|(k, c)| (k.to_vec(), c))
        .collect();
    NgramTable {
        n: all.n,
        total: counts.values().sum(),
        counts,
    }
}

/// Label co-occurrence counts; the diagonal holds per-label totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    m: [[u64; NUM_LABELS]; NUM_LABELS],
}

impl CooccurrenceMatrix {
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.m[i][j]
    }

    pub fn rows(&self) -> &[[u64; NUM_LABELS]; NUM_LABELS] {
        &self.m
    }

    pub fn diagonal(&self) -> [u64; NUM_LABELS] {
        std::array::from_fn(|i| self.m[i][i])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label"];
        header.extend(LABEL_NAMES);
        w.write_record(&header).expect("in-memory write");
        for (i, row) in self.m.iter().enumerate() {
            let mut rec = vec![LABEL_NAMES[i].to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

pub fn cooccurrence(labels: &[LabelVector]) -> Result<CooccurrenceMatrix, AnalyticsError> {
    if labels.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut m = [[0u64; NUM_LABELS]; NUM_LABELS];
    for v in labels {
        for i in 0..NUM_LABELS {
            if !v.get(i) {
                continue;
            }
            for j in 0..NUM_LABELS {
                if v.get(j) {
                    m[i][j] += 1;
                }
            }
        }
    }
    Ok(CooccurrenceMatrix { m })
}

pub const LABEL_COUNT_BUCKETS: [&str; 4] = ["0", "1", "2", "3+"];

/// How many samples carry 0, 1, 2 or 3+ active labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCountDistribution {
    pub counts: [u64; 4],
}

impl LabelCountDistribution {
    pub fn n_samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn percentages(&self) -> [f64; 4] {
        let n = self.n_samples() as f64;
        self.counts.map(|c| 100.0 * c as f64 / n)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("labels,count,percent\n");
        for ((name, c), p) in LABEL_COUNT_BUCKETS.iter().zip(self.counts).zip(self.percentages()) {
            s.push_str(&format!("{name},{c},{p:.4}\n"));
        }
        s
    }
}

pub fn label_count_distribution(labels: &[LabelVector]) -> Result<LabelCountDistribution, AnalyticsError> {
    if labels.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut counts = [0u64; 4];
    for v in labels {
        counts[v.count().min(3)] += 1;
    }
    Ok(LabelCountDistribution { counts })
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    /// `None` unless `month` is 1..=12.
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth { year: self.year + 1, month: 1 }
        } else {
            YearMonth { year: self.year, month: self.month + 1 }
        }
    }

    /// Inclusive month range; empty when `end < start`.
    pub fn range(start: YearMonth, end: YearMonth) -> impl Iterator<Item = YearMonth> {
        std::iter::successors(Some(start), |m| Some(m.succ())).take_while(move |m| *m <= end)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    /// Accepts `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected YYYY-MM, got {s:?}");
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonthRow {
    pub labels: [u64; NUM_LABELS],
    pub tweet_count: u64,
}

/// Per-month label sums over a contiguous month range.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MonthlySentimentSeries {
    rows: BTreeMap<YearMonth, MonthRow>,
}

impl MonthlySentimentSeries {
    pub fn rows(&self) -> &BTreeMap<YearMonth, MonthRow> {
        &self.rows
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        self.rows.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_totals(&self) -> [u64; NUM_LABELS] {
        let mut t = [0; NUM_LABELS];
        for row in self.rows.values() {
            for k in 0..NUM_LABELS {
                t[k] += row.labels[k];
            }
        }
        t
    }

    fn fill_gaps(&mut self) {
        if let (Some(&first), Some(&last)) = (self.rows.keys().next(), self.rows.keys().next_back()) {
            for m in YearMonth::range(first, last) {
                self.rows.entry(m).or_default();
            }
        }
    }

    /// Element-wise sum; the result spans both ranges.
    pub fn merge(&self, other: &MonthlySentimentSeries) -> MonthlySentimentSeries {
        let mut out = self.clone();
        for (m, row) in &other.rows {
            let r = out.rows.entry(*m).or_default();
            r.tweet_count += row.tweet_count;
            for k in 0..NUM_LABELS {
                r.labels[k] += row.labels[k];
            }
        }
        out.fill_gaps();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("month,tweet_count");
        for name in LABEL_NAMES {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (m, row) in &self.rows {
            s.push_str(&format!("{m},{}", row.tweet_count));
            for c in row.labels {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// One dated label vector, identified for error reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatedLabels {
    pub id: String,
    pub date: String,
    pub labels: LabelVector,
}

/// Parses `YYYY-MM-DD`, also accepting a trailing time part (`T...` or ` ...`).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let day = s.get(..10)?;
    if s.len() > 10 && !matches!(s.as_bytes()[10], b'T' | b' ') {
        return None;
    }
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

pub fn monthly_sentiments(records: &[DatedLabels]) -> Result<MonthlySentimentSeries, AnalyticsError> {
    let mut series = MonthlySentimentSeries::default();
    for r in records {
        let date = parse_date(&r.date).ok_or_else(|| AnalyticsError::UnparseableDate(r.id.clone()))?;
        let row = series.rows.entry(YearMonth::of(date)).or_default();
        row.tweet_count += 1;
        for k in 0..NUM_LABELS {
            row.labels[k] += r.labels.get(k) as u64;
        }
    }
    series.fill_gaps();
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CasesRow {
    pub month: YearMonth,
    pub tweets: u64,
    pub cases: u64,
}

pub fn tweets_vs_cases(
    series: &MonthlySentimentSeries,
    cases: &BTreeMap<YearMonth, u64>,
) -> Result<Vec<CasesRow>, AnalyticsError> {
    series
        .rows
        .iter()
        .map(|(&month, row)| {
            let c = cases.get(&month).ok_or(AnalyticsError::MissingCaseData(month))?;
            Ok(CasesRow {
                month,
                tweets: row.tweet_count,
                cases: *c,
            })
        })
        .collect()
}

pub fn cases_to_csv(rows: &[CasesRow]) -> String {
    let mut s = String::from("month,tweets,cases\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.month, r.tweets, r.cases));
    }
    s
}

/// Reads a `year,month,cases` CSV. A repeated month is an error.
pub fn load_cases<R: Read>(source: R) -> Result<BTreeMap<YearMonth, u64>, AnalyticsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| AnalyticsError::BadCaseRow {
                line: 1,
                message: format!("missing column {name}"),
            })
    };
    let (yc, mc, cc) = (col("year")?, col("month")?, col("cases")?);
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| AnalyticsError::BadCaseRow { line, message };
        let field = |c: usize| rec.get(c).unwrap_or("");
        let year: i32 = field(yc).parse().map_err(|_| bad(format!("bad year {:?}", field(yc))))?;
        let month: u32 = field(mc).parse().map_err(|_| bad(format!("bad month {:?}", field(mc))))?;
        let ym = YearMonth::new(year, month).ok_or_else(|| bad(format!("month {month} out of range")))?;
        let cases: u64 = field(cc).parse().map_err(|_| bad(format!("bad case count {:?}", field(cc))))?;
        if out.insert(ym, cases).is_some() {
            return Err(bad(format!("duplicate month {ym}")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Sentiment::*;

    fn seq(words: &[&str]) -> TokenSequence {
        TokenSequence::from_words(words.iter().copied()).unwrap()
    }

    #[test]
    fn sliding_bigrams() {
        let t = ngram_counts_all(&[seq(&["a", "b", "a", "b"])], NgramOrder::Bigram, None);
        assert_eq!(t.get(&["a", "b"]), 2);
        assert_eq!(t.get(&["b", "a"]), 1);
        assert_eq!((t.len(), t.total()), (2, 3));
    }

    #[test]
    fn short_tweets_and_boundaries() {
        let t = ngram_counts_all(&[seq(&["a", "b"]), seq(&["c", "d"])], NgramOrder::Trigram, None);
        assert!(t.is_empty());
        let t = ngram_counts_all(&[seq(&["a", "b"]), seq(&["c", "d"])], NgramOrder::Bigram, None);
        assert_eq!(t.get(&["b", "c"]), 0);
    }

    #[test]
    fn top_k_ties_are_lexicographic() {
        let corpus = [seq(&["z", "y"]), seq(&["b", "c"]), seq(&["a", "c"]), seq(&["z", "y"])];
        let t = ngram_counts(&corpus, NgramOrder::Bigram, 2, None);
        let ranked: Vec<String> = t.ranked().iter().map(|(g, _)| g.join(" ")).collect();
        assert_eq!(ranked, ["z y", "a c"]);
        assert_eq!(t.total(), 3);
        assert!(t.to_csv().starts_with("ngram,count\nz y,2\n"));
    }

    #[test]
    fn stopwords_removed_before_windowing() {
        let stop: HashSet<String> = ["the".to_string()].into();
        let t = ngram_counts_all(&[seq(&["wash", "the", "hands"])], NgramOrder::Bigram, Some(&stop));
        assert_eq!(t.get(&["wash", "hands"]), 1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn cooccurrence_example() {
        let m = cooccurrence(&[
            LabelVector::from_sentiments(&[Optimistic, Joking]),
            LabelVector::from_sentiments(&[Optimistic]),
        ])
        .unwrap();
        let (o, j) = (Optimistic.index(), Joking.index());
        assert_eq!((m.get(o, j), m.get(j, o), m.get(o, o), m.get(j, j)), (1, 1, 2, 1));
        assert!(matches!(cooccurrence(&[]), Err(AnalyticsError::EmptyInput)));
        let z = cooccurrence(&[LabelVector::empty(); 3]).unwrap();
        assert!(z.rows().iter().flatten().all(|&c| c == 0));
        assert_eq!(m.to_csv().lines().count(), 12);
    }

    #[test]
    fn label_counts() {
        let d = label_count_distribution(&[
            LabelVector::from_sentiments(&[Sad]),
            LabelVector::from_sentiments(&[Sad, Anxious]),
            LabelVector::empty(),
        ])
        .unwrap();
        assert_eq!(d.counts, [1, 1, 1, 0]);
        let d = label_count_distribution(&[LabelVector::empty(); 4]).unwrap();
        assert_eq!(d.percentages(), [100.0, 0.0, 0.0, 0.0]);
        let many = LabelVector::from_sentiments(&[Sad, Anxious, Denial, Joking]);
        assert_eq!(label_count_distribution(&[many]).unwrap().counts, [0, 0, 0, 1]);
    }

    fn rec(id: &str, date: &str, l: &[crate::labels::Sentiment]) -> DatedLabels {
        DatedLabels {
            id: id.into(),
            date: date.into(),
            labels: LabelVector::from_sentiments(l),
        }
    }

    #[test]
    fn monthly_sums_and_gaps() {
        let s = monthly_sentiments(&[
            rec("1", "2020-03-02", &[Optimistic]),
            rec("2", "2020-03-30", &[Optimistic, Sad]),
            rec("3", "2020-05-01", &[]),
        ])
        .unwrap();
        let march = s.rows()[&YearMonth::new(2020, 3).unwrap()];
        assert_eq!(march.labels[Optimistic.index()], 2);
        assert_eq!(march.labels[Sad.index()], 1);
        assert_eq!(march.tweet_count, 2);
        assert_eq!(s.rows()[&YearMonth::new(2020, 4).unwrap()], MonthRow::default());
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn monthly_bad_date_names_record() {
        let err = monthly_sentiments(&[rec("x9", "2020-02-30", &[])]).unwrap_err();
        assert!(matches!(err, AnalyticsError::UnparseableDate(id) if id == "x9"));
    }

    #[test]
    fn dates_with_time_parts() {
        assert!(parse_date("2020-04-01T10:00:00Z").is_some());
        assert!(parse_date("2020-04-01 10:00").is_some());
        assert!(parse_date("2020-04-011").is_none());
        assert!(parse_date("2020-13-01").is_none());
    }

    #[test]
    fn year_boundary_range() {
        let months: Vec<String> = YearMonth::range(YearMonth::new(2020, 11).unwrap(), YearMonth::new(2021, 2).unwrap())
            .map(|m| m.to_string())
            .collect();
        assert_eq!(months, ["2020-11", "2020-12", "2021-01", "2021-02"]);
        assert_eq!("2020-09".parse::<YearMonth>().unwrap(), YearMonth::new(2020, 9).unwrap());
        assert!("2020-00".parse::<YearMonth>().is_err());
    }

    #[test]
    fn merge_is_additive() {
        let a = [rec("1", "2020-03-01", &[Sad]), rec("2", "2020-04-01", &[Joking])];
        let b = [rec("3", "2020-03-05", &[Sad, Joking]), rec("4", "2020-06-01", &[])];
        let both: Vec<DatedLabels> = a.iter().chain(b.iter()).cloned().collect();
        let merged = monthly_sentiments(&a).unwrap().merge(&monthly_sentiments(&b).unwrap());
        assert_eq!(merged, monthly_sentiments(&both).unwrap());
    }

    #[test]
    fn cases_join() {
        let s = monthly_sentiments(&[rec("1", "2020-03-01", &[]), rec("2", "2020-04-09", &[])]).unwrap();
        let cases = load_cases("year,month,cases\n2020,3,100\n2020,4,250\n".as_bytes()).unwrap();
        let rows = tweets_vs_cases(&s, &cases).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].cases, 250);
        assert_eq!(cases_to_csv(&rows), "month,tweets,cases\n2020-03,1,100\n2020-04,1,250\n");

        let short = load_cases("year,month,cases\n2020,3,100\n".as_bytes()).unwrap();
        assert!(matches!(
            tweets_vs_cases(&s, &short),
            Err(AnalyticsError::MissingCaseData(m)) if m == YearMonth::new(2020, 4).unwrap()
        ));
    }

    #[test]
    fn case_file_errors() {
        assert!(load_cases("year,month\n2020,3\n".as_bytes()).is_err());
        assert!(load_cases("year,month,cases\n2020,13,5\n".as_bytes()).is_err());
        assert!(load_cases("year,month,cases\n2020,3,5\n2020,3,6\n".as_bytes()).is_err());
    }
}
