//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use covsent::analytics::{
    cooccurrence, label_count_distribution, monthly_sentiments, ngram_counts_all, DatedLabels, NgramOrder,
};
use covsent::corpus::{fixture_embeddings, make_fixture, split};
use covsent::embedding::load_glove;
use covsent::metrics::{evaluate, f1_scores, hamming_loss, jaccard_score, lrap, EvaluationReport};
use covsent::net::{backward, forward_with_masks, Architecture, DropoutMasks, NetworkDims, NetworkParameters, TrainConfig};
use covsent::normalize::{normalize_tweet, RewriteTable, TokenSequence};
use covsent::pipeline::{evaluate_examples, train_examples, Encoder};
use covsent::{LabelVector, NUM_LABELS};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use common::{bf_f1, bf_hamming, bf_jaccard, bf_lrap, gradient_mismatches, naive_ngrams};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

// 1
fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let dims = NetworkDims {
        input_dim: 4,
        hidden1: 3,
        hidden2: 3,
    };
    let target = LabelVector::from_u8s(&[0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1]).unwrap();
    let mut checked = 0;
    for arch in [Architecture::Lstm, Architecture::BdLstm] {
        for dropout in [false, true] {
            let params = NetworkParameters::<f64>::init(arch, dims, 0.4, 17).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let x = Array2::from_shape_simple_fn((3, dims.input_dim), || rng.gen_range(-1.0..1.0));
            let masks = dropout
                .then(|| DropoutMasks::sample(3, params.layer1.output_dim(), params.final_dim(), 0.4, &mut rng));
            let cache = forward_with_masks(x.view(), &params, masks.as_ref()).unwrap();
            let grad = backward(&cache, &params, &target).unwrap();
            let (n, bad) = gradient_mismatches(&params, &grad, &x, masks.as_ref(), &target, 1e-5, 1e-4, 1e-6);
            checked += n;
            if let Some((name, i, a, b)) = bad.first() {
                return Err(format!("{arch} {name}[{i}]: analytic {a:e} vs numeric {b:e} ({} bad)", bad.len()));
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{checked} parameter gradients, {:.2}s", start.elapsed().as_secs_f64()))
}

// 2
fn overfit_oracle() -> Outcome {
    let (labeled, _) = make_fixture(7, 50);
    let embeddings = load_glove(fixture_embeddings(7, 8).as_bytes(), 8).unwrap();
    let encoder = Encoder::new(RewriteTable::default_table(), embeddings, 60);
    let config = TrainConfig {
        epochs: 200,
        batch_size: 10,
        learning_rate: 0.005,
        seed: 7,
        clip_norm: None,
    };
    let total = Instant::now();
    let mut notes = Vec::new();
    for arch in [Architecture::Lstm, Architecture::BdLstm] {
        let start = Instant::now();
        let params = NetworkParameters::<f32>::init(arch, NetworkDims { input_dim: 8, hidden1: 128, hidden2: 64 }, 0.65, 7)
            .unwrap();
        let trained = train_examples(&encoder, &labeled, params, &config).map_err(|e| format!("{arch}: {e}"))?;
        let report = evaluate_examples(&encoder, &labeled, &trained.params, 0.5).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        check(report.bce < 0.05, || format!("{arch}: training BCE {:.4}", report.bce))?;
        check(report.f1_micro >= 0.95, || format!("{arch}: training F1-micro {:.3}", report.f1_micro))?;
        notes.push(format!(
            "{arch} bce {:.4} f1_micro {:.3} in {:.0}s",
            report.bce,
            report.f1_micro,
            elapsed.as_secs_f64()
        ));
    }
    within(total.elapsed(), Duration::from_secs(120))?;
    Ok(notes.join("; "))
}

// 3
fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let rows: Vec<Vec<bool>> = (0..8usize).map(|m| (0..3).map(|k| m >> k & 1 == 1).collect()).collect();
    let mut pairs = 0;
    for t in &rows {
        for p in &rows {
            let (t1, p1) = (vec![t.clone()], vec![p.clone()]);
            let f = f1_scores(&t1, &p1).unwrap();
            let ok = hamming_loss(&t1, &p1).unwrap() == bf_hamming(&t1, &p1)
                && jaccard_score(&t1, &p1).unwrap() == bf_jaccard(&t1, &p1)
                && (f.macro_f1, f.micro_f1) == bf_f1(&t1, &p1);
            check(ok, || format!("pair {t:?} / {p:?} differs"))?;
            pairs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let mut truth: Vec<bool> = (0..3).map(|_| rng.gen_bool(0.4)).collect();
        if !truth.iter().any(|&b| b) {
            truth[rng.gen_range(0..3)] = true;
        }
        // coarse values so ties are common
        let scores: Vec<f64> = (0..3).map(|_| (rng.gen_range(0..6) as f64) / 5.0).collect();
        let (t, s) = (vec![truth], vec![scores]);
        let expected = bf_lrap(&t, &s).unwrap();
        let got = lrap(&t, &s).unwrap();
        check((got - expected).abs() <= 1e-12, || format!("LRAP vector {i}: {got} vs {expected}"))?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{pairs} label pairs exact, 1000 LRAP vectors"))
}

#[derive(Deserialize)]
struct Golden {
    threshold: f64,
    truth: Vec<Vec<u8>>,
    scores: Vec<Vec<f64>>,
    expected: EvaluationReport,
}

// 4
fn golden_report() -> Outcome {
    let g: Golden = toml::from_str(include_str!("fixtures/golden_metrics.toml")).map_err(|e| e.to_string())?;
    let truth: Vec<LabelVector> = g.truth.iter().map(|r| LabelVector::from_u8s(r).unwrap()).collect();
    let scores: Vec<[f64; NUM_LABELS]> =
        g.scores.iter().map(|r| <[f64; NUM_LABELS]>::try_from(r.as_slice()).unwrap()).collect();
    let got = evaluate(&truth, &scores, g.threshold).map_err(|e| e.to_string())?;
    let e = &g.expected;
    check(got.n_samples == e.n_samples, || "sample count".into())?;
    for (name, a, b) in [
        ("bce", got.bce, e.bce),
        ("hamming", got.hamming, e.hamming),
        ("jaccard", got.jaccard, e.jaccard),
        ("lrap", got.lrap, e.lrap),
        ("f1_macro", got.f1_macro, e.f1_macro),
        ("f1_micro", got.f1_micro, e.f1_micro),
    ] {
        check((a - b).abs() <= 1e-9, || format!("{name}: {a} vs {b}"))?;
    }
    Ok("all six fields within 1e-9".into())
}

fn run_bin(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_covsent"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

// 5
fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    run_bin(d, &["fixture", "--out-dir", ".", "--seed", "11", "--size", "30"])?;
    for out in ["a.spnet", "b.spnet"] {
        run_bin(
            d,
            &["train", "--data", "labeled.csv", "--glove", "glove.txt", "--arch", "bdlstm", "--epochs", "2", "--hidden1", "16", "--hidden2", "8", "--out", out],
        )?;
    }
    let read = |p: &str| fs::read(d.join(p)).map_err(|e| e.to_string());
    check(read("a.spnet")? == read("b.spnet")?, || "model files differ".into())?;

    run_bin(d, &["analyze", "cooccur", "--input", "labeled.csv", "--out", "cooccur.csv"])?;
    run_bin(d, &["analyze", "labelcounts", "--input", "labeled.csv", "--out", "labelcounts.csv"])?;
    let inputs = ["cooccur.csv", "labelcounts.csv"];
    for dir in ["r1", "r2"] {
        let mut args = vec!["report", "--input"];
        args.extend(inputs);
        args.extend(["--out-dir", dir]);
        run_bin(d, &args)?;
    }
    for stem in ["cooccur", "labelcounts"] {
        let a = read(&format!("r1/{stem}.svg"))?;
        check(!a.is_empty() && a == read(&format!("r2/{stem}.svg"))?, || format!("{stem}.svg differs"))?;
    }
    Ok("model files and SVGs byte-identical".into())
}

fn fuzz_string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "omg", "OMG", "btw", "BTW", "socialdistancing", "#SocialDistancing", "#", "@", "@who_int", "https://t.co/z",
        "www.x.in/p", "😊", "☹", "☹\u{FE0F}", "🛏", "🔥", "😉", "😂", "🙏🏾", "👨\u{200D}👩\u{200D}👧", "🇮🇳", "\u{20E3}",
        "\u{200D}", "\u{FE0F}", "नमस्ते", "मुंबई", "é", "e\u{301}", "’", "'", "-", "--", ".", "!!", " ", "  ", "\t",
        "\n", "covid19", "COVID-19", "2020",
    ];
    let n = rng.gen_range(0..14);
    let mut s = String::new();
    for _ in 0..n {
        if rng.gen_bool(0.75) {
            s.push_str(PIECES[rng.gen_range(0..PIECES.len())]);
        } else {
            let c = loop {
                if let Some(c) = char::from_u32(rng.gen_range(0..0x2_0000)) {
                    break c;
                }
            };
            s.push(c);
        }
    }
    s
}

// 6
fn normalizer_conformance() -> Outcome {
    let table = RewriteTable::default_table();
    let golden = [
        ("omg", "oh my god"),
        ("btw", "by the way"),
        ("socialdistancing", "social distancing"),
        ("\u{1F60A}", "smiling face"),
        ("\u{2639}", "sad face"),
        ("\u{1F6CF}", "bed"),
        ("\u{1F525}", "fire"),
        ("\u{1F609}", "wink"),
        ("\u{1F602}", "laugh"),
    ];
    for (raw, want) in golden {
        let got = normalize_tweet(raw, &table);
        check(got == want, || format!("{raw:?} -> {got:?}, expected {want:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let raw = fuzz_string(&mut rng);
        let once = normalize_tweet(&raw, &table);
        let twice = normalize_tweet(&once, &table);
        check(once == twice, || format!("not idempotent on {raw:?}: {once:?} -> {twice:?}"))?;
    }
    Ok(format!("{} table rewrites, 10000 fuzz strings idempotent", golden.len()))
}

// 7
fn analytics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for c in 0..100 {
        let corpus: Vec<Vec<String>> = (0..rng.gen_range(0..8))
            .map(|_| (0..rng.gen_range(0..9)).map(|_| ["a", "b", "c", "d"][rng.gen_range(0..4)].to_string()).collect())
            .collect();
        let seqs: Vec<TokenSequence> =
            corpus.iter().map(|t| TokenSequence::from_words(t.iter().cloned()).unwrap()).collect();
        for order in [NgramOrder::Bigram, NgramOrder::Trigram] {
            let got = ngram_counts_all(&seqs, order, None);
            let want = naive_ngrams(&corpus, order.n());
            let same = got.len() == want.len() && want.iter().all(|(g, n)| got.counts().get(g) == Some(n));
            check(same, || format!("corpus {c}, n={}", order.n()))?;
        }
    }
    for s in 0..1000 {
        let labels: Vec<LabelVector> = (0..rng.gen_range(1..25))
            .map(|_| LabelVector::new(std::array::from_fn(|_| rng.gen_bool(0.25))))
            .collect();
        let m = cooccurrence(&labels).unwrap();
        for i in 0..NUM_LABELS {
            let total = labels.iter().filter(|v| v.get(i)).count() as u64;
            check(m.get(i, i) == total, || format!("set {s}: diagonal {i}"))?;
            for j in 0..NUM_LABELS {
                check(m.get(i, j) == m.get(j, i), || format!("set {s}: asymmetric at {i},{j}"))?;
            }
        }
        let d = label_count_distribution(&labels).unwrap();
        check(d.n_samples() == labels.len() as u64, || format!("set {s}: buckets do not partition"))?;
    }
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
    let series = monthly_sentiments(&recs).map_err(|e| e.to_string())?;
    let labels: Vec<LabelVector> = labeled.iter().map(|e| e.labels).collect();
    check(series.label_totals() == cooccurrence(&labels).unwrap().diagonal(), || {
        "monthly totals differ from co-occurrence diagonal".into()
    })?;
    Ok("100 corpora, 1000 label sets, fixture cross-check".into())
}

// 8
fn split_contract() -> Outcome {
    let (labeled, _) = make_fixture(7, 50);
    let (train, test) = split(&labeled, 0.9, 42).map_err(|e| e.to_string())?;
    check((train.len(), test.len()) == (45, 5), || format!("{}/{}", train.len(), test.len()))?;
    let key = |e: &covsent::corpus::LabeledExample| format!("{}|{}", e.text, e.labels);
    let mut all: Vec<String> = labeled.iter().map(key).collect();
    let mut parts: Vec<String> = train.iter().chain(&test).map(key).collect();
    all.sort();
    parts.sort();
    check(all == parts, || "train and test do not partition the input".into())?;
    let train_keys: HashSet<String> = train.iter().map(key).collect();
    check(test.iter().all(|e| !train_keys.contains(&key(e))), || "overlap".into())?;
    Ok("45/5, exact partition".into())
}

// 9
fn reference_band() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    // Real data is used when provided; otherwise the synthetic fixture stands in.
    let (data, glove, source) = match (std::env::var("COVSENT_LABELED"), std::env::var("COVSENT_GLOVE")) {
        (Ok(data), Ok(glove)) => (data, glove, "user data"),
        _ => {
            run_bin(d, &["fixture", "--out-dir", ".", "--seed", "7", "--size", "50"])?;
            ("labeled.csv".to_string(), "glove.txt".to_string(), "fixture stand-in")
        }
    };
    run_bin(d, &["train", "--data", &data, "--glove", &glove, "--arch", "lstm", "--epochs", "3", "--out", "model.spnet"])?;
    let report = fs::read_to_string(d.join("model.report.txt")).map_err(|e| e.to_string())?;
    for needle in ["hamming=", "jaccard=", "lrap=", "f1_macro=", "f1_micro=", "ref lstm", "0.157", "0.418", "0.511", "0.430", "0.493"] {
        check(report.contains(needle), || format!("report lacks {needle:?}"))?;
    }
    Ok(format!("report produced with reference column ({source}); values not asserted"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gradient fidelity", gradient_fidelity),
        ("overfit oracle", overfit_oracle),
        ("metric oracle equivalence", metric_oracle),
        ("golden report", golden_report),
        ("determinism", determinism),
        ("normalizer conformance", normalizer_conformance),
        ("analytics oracles", analytics_oracles),
        ("split contract", split_contract),
        ("reference band", reference_band),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("criterion {}: {name}: PASS ({detail})", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({why})", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL (panicked)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
