mod common;

use covsent::analytics::{
    cooccurrence, label_count_distribution, monthly_sentiments, ngram_counts, ngram_counts_all, tweets_vs_cases,
    DatedLabels, NgramOrder, YearMonth,
};
use covsent::corpus::make_fixture;
use covsent::normalize::TokenSequence;
use covsent::{LabelVector, NUM_LABELS};
use proptest::prelude::*;

use common::naive_ngrams;

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[abc]", 0..7), 0..6)
}

fn label_vec() -> impl Strategy<Value = LabelVector> {
    prop::array::uniform11(any::<bool>()).prop_map(LabelVector::new)
}

fn sequences(c: &[Vec<String>]) -> Vec<TokenSequence> {
    c.iter().map(|t| TokenSequence::from_words(t.iter().cloned()).unwrap()).collect()
}

proptest! {
    #[test]
    fn ngrams_match_naive_enumeration(c in corpus(), tri in any::<bool>()) {
        let order = if tri { NgramOrder::Trigram } else { NgramOrder::Bigram };
        let table = ngram_counts_all(&sequences(&c), order, None);
        let naive = naive_ngrams(&c, order.n());
        prop_assert_eq!(table.len(), naive.len());
        for (gram, count) in &naive {
            prop_assert_eq!(table.counts().get(gram), Some(count));
        }
        prop_assert_eq!(table.total(), naive.values().sum::<u64>());
    }

    #[test]
    fn top_k_is_a_prefix_of_the_ranking(c in corpus(), k in 1usize..5) {
        let seqs = sequences(&c);
        let all = ngram_counts_all(&seqs, NgramOrder::Bigram, None);
        let top = ngram_counts(&seqs, NgramOrder::Bigram, k, None);
        let ranked = all.ranked();
        prop_assert_eq!(top.ranked(), ranked[..ranked.len().min(k)].to_vec());
    }

    #[test]
    fn duplicated_corpus_doubles_counts(c in corpus()) {
        let once = ngram_counts_all(&sequences(&c), NgramOrder::Bigram, None);
        let doubled: Vec<Vec<String>> = c.iter().chain(c.iter()).cloned().collect();
        let twice = ngram_counts_all(&sequences(&doubled), NgramOrder::Bigram, None);
        for (g, n) in once.counts() {
            prop_assert_eq!(twice.counts()[g], 2 * n);
        }
    }

    #[test]
    fn cooccurrence_identities(labels in prop::collection::vec(label_vec(), 1..30)) {
        let m = cooccurrence(&labels).unwrap();
        for i in 0..NUM_LABELS {
            prop_assert_eq!(m.get(i, i), labels.iter().filter(|v| v.get(i)).count() as u64);
            for j in 0..NUM_LABELS {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
                prop_assert!(m.get(i, j) <= m.get(i, i));
            }
        }
    }

    #[test]
    fn label_count_buckets_partition(labels in prop::collection::vec(label_vec(), 1..30)) {
        let d = label_count_distribution(&labels).unwrap();
        prop_assert_eq!(d.n_samples(), labels.len() as u64);
        prop_assert!((d.percentages().iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn monthly_series_is_additive(
        a in prop::collection::vec((1u32..=12, 1u32..=28, label_vec()), 0..15),
        b in prop::collection::vec((1u32..=12, 1u32..=28, label_vec()), 0..15),
    ) {
        let recs = |v: &[(u32, u32, LabelVector)], tag: &str| -> Vec<DatedLabels> {
            v.iter().enumerate().map(|(i, (m, d, l))| DatedLabels {
                id: format!("{tag}{i}"),
                date: format!("2020-{m:02}-{d:02}"),
                labels: *l,
            }).collect()
        };
        let (ra, rb) = (recs(&a, "a"), recs(&b, "b"));
        let both: Vec<DatedLabels> = ra.iter().chain(&rb).cloned().collect();
        let sa = monthly_sentiments(&ra).unwrap();
        let merged = sa.merge(&monthly_sentiments(&rb).unwrap());
        prop_assert_eq!(&merged, &monthly_sentiments(&both).unwrap());
        for row in merged.rows().values() {
            prop_assert!(row.labels.iter().all(|&c| c <= row.tweet_count));
        }
        let months: Vec<YearMonth> = merged.months().collect();
        for w in months.windows(2) {
            prop_assert_eq!(w[0].succ(), w[1]);
        }
    }
}

#[test]
fn fixture_monthly_totals_equal_cooccurrence_diagonal() {
    let (labeled, tweets) = make_fixture(7, 50);
    let recs: Vec<DatedLabels> = tweets
        .iter()
        .zip(&labeled)
        .map(|(t, l)| DatedLabels {
            id: t.id.clone(),
            date: t.date.to_string(),
            labels: l.labels,
        })
        .collect();
    let series = monthly_sentiments(&recs).unwrap();
    let labels: Vec<LabelVector> = labeled.iter().map(|e| e.labels).collect();
    assert_eq!(series.label_totals(), cooccurrence(&labels).unwrap().diagonal());
    assert_eq!(series.rows().values().map(|r| r.tweet_count).sum::<u64>(), 50);
}

#[test]
fn seven_month_cases_join_in_calendar_order() {
    let recs: Vec<DatedLabels> = (3..=9)
        .rev()
        .map(|m| DatedLabels {
            id: m.to_string(),
            date: format!("2020-{m:02}-15"),
            labels: LabelVector::empty(),
        })
        .collect();
    let series = monthly_sentiments(&recs).unwrap();
    let cases = (1..=12).map(|m| (YearMonth::new(2020, m).unwrap(), m as u64 * 10)).collect();
    let rows = tweets_vs_cases(&series, &cases).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[0].month < w[1].month));
    assert_eq!(rows[0].month, YearMonth::new(2020, 3).unwrap());
    assert_eq!(rows[6].cases, 90);
}
