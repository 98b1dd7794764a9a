//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand};

use crate::analytics::{
    self, cases_to_csv, cooccurrence, label_count_distribution, load_cases, monthly_sentiments, ngram_counts,
    tweets_vs_cases, DatedLabels, NgramOrder, YearMonth,
};
use crate::corpus::{self, filter_tweets, load_labeled, load_tweets, make_fixture, split, MonthRange};
use crate::embedding::{load_glove, sniff_dimension, DEFAULT_MAX_LEN};
use crate::labels::{LabelVector, Sentiment, LABEL_NAMES, NUM_LABELS};
use crate::metrics::{REFERENCE_BDLSTM, REFERENCE_LSTM};
use crate::net::{
    load_model_with_annotations, save_model_with_annotations, Architecture, NetError, NetworkDims, NetworkParameters,
    TrainConfig, DEFAULT_DROPOUT, DEFAULT_THRESHOLD,
};
use crate::normalize::{normalize_tweet, preprocess, RewriteTable};
use crate::pipeline::{evaluate_examples, train_examples, Encoder, PipelineError};
use crate::report;

/// Default seed for every random stream; the value itself is arbitrary.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "covsent", version, about = "Multi-label tweet sentiment pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize tweets, one per line or the text column of a CSV
    Normalize(NormalizeArgs),
    /// Train an LSTM or BD-LSTM classifier on a labeled CSV
    Train(TrainArgs),
    /// Score a model on a labeled CSV
    Eval(EvalArgs),
    /// Predict labels for a tweet CSV
    Predict(PredictArgs),
    /// Corpus analytics (CSV plus an SVG twin)
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Render analytics CSVs to SVG
    Report(ReportArgs),
    /// Write a synthetic labeled corpus, tweet corpus, vectors and case counts
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    /// Extra rewrite rules (pattern<TAB>replacement), added to the built-in table
    #[arg(long)]
    pub rewrites: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Treat the input as CSV and rewrite its `text` column
    #[arg(long)]
    pub csv: bool,
    /// Emit space-joined tokens instead of normalized text
    #[arg(long)]
    pub tokens: bool,
    #[command(flatten)]
    pub rewrites: RewriteArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled CSV
    #[arg(long)]
    pub data: PathBuf,
    /// GloVe-format vector file
    #[arg(long)]
    pub glove: PathBuf,
    /// Vector dimension; read from the file when omitted
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value = "lstm")]
    pub arch: Architecture,
    /// Model output path; loss CSV and test report are written beside it
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch_size: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub max_len: usize,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
    #[arg(long, default_value_t = 128)]
    pub hidden1: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden2: usize,
    /// Share of examples used for training; the rest is the test set
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[command(flatten)]
    pub rewrites: RewriteArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Overrides the vector file recorded in the model
    #[arg(long)]
    pub glove: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// Report path; JSON when it ends in .json, key=value text otherwise
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tweet CSV (id,date,region,text)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the 11 sigmoid scores per row
    #[arg(long)]
    pub scores: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Keep only this region tag
    #[arg(long)]
    pub region: Option<String>,
    /// First month kept (YYYY-MM)
    #[arg(long)]
    pub from: Option<YearMonth>,
    /// Last month kept (YYYY-MM)
    #[arg(long)]
    pub to: Option<YearMonth>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Top bi- or tri-grams of the normalized text
    Ngrams {
        /// CSV with a `text` column
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..=3).map(|v| v as usize))]
        n: usize,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        top_k: usize,
        /// One stopword per line
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[command(flatten)]
        rewrites: RewriteArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label co-occurrence matrix
    Cooccur {
        /// CSV with the 11 label columns
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distribution of the number of active labels
    Labelcounts {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monthly label sums from a prediction CSV (id,date,region + labels)
    Monthly {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monthly tweet counts joined with a year,month,cases file
    Cases {
        /// CSV with id,date,region columns; label columns are optional
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analytics CSVs to render
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(10..).map(|v| v as usize))]
    pub size: usize,
    /// Dimension of the fixture vectors
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub dim: usize,
}

/// Failure classes, mapped to exit codes by [`run`].
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(context: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", context.display()))
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            NetError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Net(n) => n.into(),
            PipelineError::Metric(m @ crate::metrics::MetricError::NonFiniteScore { .. }) => {
                CliError::Numeric(m.to_string())
            }
            PipelineError::Metric(m) => CliError::Data(m.to_string()),
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Normalize(a) => cmd_normalize(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Report(a) => cmd_report(a),
        Command::Fixture(a) => cmd_fixture(a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(data(path))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(data(dir))?;
    }
    fs::write(path, contents).map_err(data(path))
}

fn load_rewrites(args: &RewriteArgs) -> Result<RewriteTable, CliError> {
    let base = RewriteTable::default_table();
    match &args.rewrites {
        None => Ok(base),
        Some(p) => {
            let extra = RewriteTable::load(open(p)?).map_err(data(p))?;
            base.extended_with(&extra).map_err(data(p))
        }
    }
}

fn cmd_normalize(a: NormalizeArgs) -> Result<(), CliError> {
    let table = load_rewrites(&a.rewrites)?;
    let convert = |s: &str| {
        if a.tokens {
            preprocess(s, &table).as_slice().join(" ")
        } else {
            normalize_tweet(s, &table)
        }
    };
    let mut out = String::new();
    if a.csv {
        let mut reader = csv::Reader::from_reader(open(&a.input)?);
        let headers = reader.headers().map_err(data(&a.input))?.clone();
        let col = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("text"))
            .ok_or_else(|| CliError::Data(format!("{}: no text column", a.input.display())))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&headers).map_err(data(&a.input))?;
        for rec in reader.records() {
            let rec = rec.map_err(data(&a.input))?;
            let row: Vec<String> = rec
                .iter()
                .enumerate()
                .map(|(i, f)| if i == col { convert(f) } else { f.to_string() })
                .collect();
            w.write_record(&row).map_err(data(&a.input))?;
        }
        out = String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?)
            .map_err(|e| CliError::Data(e.to_string()))?;
    } else {
        for line in open(&a.input)?.lines() {
            out.push_str(&convert(&line.map_err(data(&a.input))?));
            out.push('\n');
        }
    }
    match &a.output {
        Some(p) => write_file(p, &out),
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .map_err(|e| CliError::Data(e.to_string())),
    }
}

fn load_embeddings(path: &Path, dim: Option<usize>) -> Result<crate::embedding::EmbeddingTable, CliError> {
    let dim = match dim {
        Some(d) => d,
        None => sniff_dimension(open(path)?)
            .map_err(data(path))?
            .ok_or_else(|| CliError::Data(format!("{}: no vectors", path.display())))?,
    };
    load_glove(open(path)?, dim).map_err(data(path))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn check_threshold(t: f64) -> Result<(), CliError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("threshold {t} outside (0, 1)")))
    }
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    check_threshold(a.threshold)?;
    let rewrites = load_rewrites(&a.rewrites)?;
    let embeddings = load_embeddings(&a.glove, a.dim)?;
    let examples = load_labeled(open(&a.data)?).map_err(data(&a.data))?;
    let (train_set, test_set) = split(&examples, a.train_fraction, a.seed).map_err(|e| match e {
        corpus::CorpusError::InvalidFraction(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;

    let dims = NetworkDims {
        input_dim: embeddings.dimension(),
        hidden1: a.hidden1,
        hidden2: a.hidden2,
    };
    let params = NetworkParameters::<f32>::init(a.arch, dims, a.dropout, a.seed).map_err(|e| match e {
        NetError::InvalidConfig(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size as usize,
        learning_rate: a.learning_rate,
        seed: a.seed,
        clip_norm: a.clip_norm,
    };
    let encoder = Encoder::new(rewrites, embeddings, a.max_len);
    let outcome = train_examples(&encoder, &train_set, params, &config)?;

    let mut notes = BTreeMap::new();
    notes.insert("glove".to_string(), a.glove.display().to_string());
    notes.insert("dim".to_string(), encoder.embeddings.dimension().to_string());
    notes.insert("max_len".to_string(), a.max_len.to_string());
    if let Some(r) = &a.rewrites.rewrites {
        notes.insert("rewrites".to_string(), r.display().to_string());
    }
    let mut model_bytes = Vec::new();
    save_model_with_annotations(&outcome.params, &notes, &mut model_bytes)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(data(dir))?;
    }
    fs::write(&a.out, &model_bytes).map_err(data(&a.out))?;

    let mut loss_csv = String::from("epoch,loss\n");
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        loss_csv.push_str(&format!("{},{l}\n", i + 1));
    }
    write_file(&with_suffix(&a.out, "loss.csv"), &loss_csv)?;

    let report = evaluate_examples(&encoder, &test_set, &outcome.params, a.threshold)?;
    let reference = match a.arch {
        Architecture::Lstm => REFERENCE_LSTM,
        Architecture::BdLstm => REFERENCE_BDLSTM,
    };
    let text = format!(
        "# test set: {} of {} examples ({} train, {} skipped with no tokens)\n{}\n# reference values come from a different corpus and training setup; they are context, not targets\n{}",
        test_set.len(),
        examples.len(),
        train_set.len(),
        outcome.skipped_empty,
        report.to_key_value(),
        report.comparison(&reference)
    );
    write_file(&with_suffix(&a.out, "report.txt"), &text)?;
    println!(
        "trained {} for {} epochs; final loss {:.4}; test f1_micro {:.3}",
        a.arch,
        outcome.epoch_losses.len(),
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
        report.f1_micro
    );
    Ok(())
}

fn load_model_encoder(a: &ModelArgs) -> Result<(NetworkParameters<f32>, Encoder), CliError> {
    check_threshold(a.threshold)?;
    let (params, notes) = load_model_with_annotations(open(&a.model)?).map_err(data(&a.model))?;
    let glove = match (&a.glove, notes.get("glove")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::Usage("model records no vector file; pass --glove".into())),
    };
    let embeddings = load_embeddings(&glove, Some(params.dims().input_dim))?;
    let max_len = match notes.get("max_len") {
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad max_len annotation", a.model.display())))?,
        None => DEFAULT_MAX_LEN,
    };
    let rewrites = load_rewrites(&RewriteArgs {
        rewrites: notes.get("rewrites").map(PathBuf::from),
    })?;
    Ok((params, Encoder::new(rewrites, embeddings, max_len)))
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let (params, encoder) = load_model_encoder(&a.model)?;
    let examples = load_labeled(open(&a.data)?).map_err(data(&a.data))?;
    let report = evaluate_examples(&encoder, &examples, &params, a.model.threshold)?;
    print!("{}", report.to_key_value());
    if let Some(out) = &a.out {
        let text = if out.extension().is_some_and(|e| e == "json") {
            report.to_json() + "\n"
        } else {
            report.to_key_value()
        };
        write_file(out, &text)?;
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<(), CliError> {
    let (params, encoder) = load_model_encoder(&a.model)?;
    let tweets = load_tweets(open(&a.input)?).map_err(data(&a.input))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["id", "date", "region"].map(String::from).to_vec();
    header.extend(LABEL_NAMES.iter().map(|s| s.to_string()));
    if a.scores {
        header.extend(LABEL_NAMES.iter().map(|s| format!("score_{}", s.replace(' ', "_"))));
    }
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for t in &tweets {
        let scores = encoder.scores(&params, &t.text)?;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(CliError::Numeric(format!("tweet {}: non-finite score", t.id)));
        }
        let labels = LabelVector::from_scores(&scores, a.model.threshold);
        let mut row = vec![t.id.clone(), t.date.format("%Y-%m-%d").to_string(), t.region.clone()];
        row.extend(labels.bits().iter().map(|&b| (b as u8).to_string()));
        if a.scores {
            row.extend(scores.iter().map(|s| format!("{s:.6}")));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    write_file(&a.out, &String::from_utf8_lossy(&bytes))?;
    println!("predicted {} tweets", tweets.len());
    Ok(())
}

/// Rows of a CSV with optional label columns, plus id/date/region when present.
struct LabeledRows {
    ids: Vec<String>,
    dates: Vec<String>,
    regions: Vec<String>,
    labels: Vec<LabelVector>,
}

fn read_label_rows(path: &Path, require_labels: bool) -> Result<LabeledRows, CliError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = reader.headers().map_err(data(path))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let label_cols: Vec<Option<usize>> = Sentiment::ALL
        .iter()
        .map(|&s| headers.iter().position(|h| Sentiment::from_name(h) == Some(s)))
        .collect();
    let have_labels = label_cols.iter().all(Option::is_some);
    if require_labels && !have_labels {
        let missing = Sentiment::ALL[label_cols.iter().position(Option::is_none).unwrap_or(0)];
        return Err(CliError::Data(format!("{}: missing column {:?}", path.display(), missing.name())));
    }
    let (id_col, date_col, region_col) = (find("id"), find("date"), find("region"));
    let mut rows = LabeledRows {
        ids: vec![],
        dates: vec![],
        regions: vec![],
        labels: vec![],
    };
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(data(path))?;
        let get = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("").trim().to_string();
        let mut bits = [false; NUM_LABELS];
        if have_labels {
            for (k, c) in label_cols.iter().enumerate() {
                bits[k] = match get(*c).as_str() {
                    "1" => true,
                    "0" => false,
                    _ => {
                        return Err(CliError::Data(format!(
                            "{}: row {}, column {:?}: label must be 0 or 1",
                            path.display(),
                            i + 1,
                            LABEL_NAMES[k]
                        )))
                    }
                };
            }
        }
        rows.ids.push(id_col.map_or_else(|| (i + 1).to_string(), |_| get(id_col)));
        rows.dates.push(get(date_col));
        rows.regions.push(get(region_col));
        rows.labels.push(LabelVector::new(bits));
    }
    Ok(rows)
}

fn month_filter(f: &FilterArgs) -> Result<Option<MonthRange>, CliError> {
    let range = match (f.from, f.to) {
        (None, None) => return Ok(None),
        (Some(a), Some(b)) => MonthRange::new(a, b),
        (Some(a), None) => MonthRange::new(a, YearMonth::new(9999, 12).expect("valid month")),
        (None, Some(b)) => MonthRange::new(YearMonth::new(0, 1).expect("valid month"), b),
    };
    range.map(Some).map_err(|e| CliError::Usage(e.to_string()))
}

fn dated_records(path: &Path, filter: &FilterArgs, require_labels: bool) -> Result<Vec<DatedLabels>, CliError> {
    let rows = read_label_rows(path, require_labels)?;
    let range = month_filter(filter)?;
    let mut out = Vec::new();
    for i in 0..rows.ids.len() {
        if filter.region.as_ref().is_some_and(|r| *r != rows.regions[i]) {
            continue;
        }
        if let Some(range) = range {
            let date = analytics::parse_date(&rows.dates[i])
                .ok_or_else(|| CliError::Data(format!("record {}: unparseable date", rows.ids[i])))?;
            if !range.contains(date) {
                continue;
            }
        }
        out.push(DatedLabels {
            id: rows.ids[i].clone(),
            date: rows.dates[i].clone(),
            labels: rows.labels[i],
        });
    }
    Ok(out)
}

fn write_analysis(out: &Path, csv_text: &str) -> Result<(), CliError> {
    write_file(out, csv_text)?;
    let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let svg = report::render_file(out, dir).map_err(data(out))?;
    println!("wrote {} and {}", out.display(), svg.display());
    Ok(())
}

fn cmd_analyze(cmd: AnalyzeCommand) -> Result<(), CliError> {
    match cmd {
        AnalyzeCommand::Ngrams {
            input,
            n,
            top_k,
            stopwords,
            rewrites,
            out,
        } => {
            let table = load_rewrites(&rewrites)?;
            let stop: Option<HashSet<String>> = match &stopwords {
                None => None,
                Some(p) => Some(
                    open(p)?
                        .lines()
                        .map(|l| l.map(|s| s.trim().to_lowercase()))
                        .filter(|l| l.as_ref().map_or(true, |s| !s.is_empty()))
                        .collect::<Result<_, _>>()
                        .map_err(data(p))?,
                ),
            };
            let mut reader = csv::Reader::from_reader(open(&input)?);
            let headers = reader.headers().map_err(data(&input))?.clone();
            let col = headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case("text"))
                .ok_or_else(|| CliError::Data(format!("{}: no text column", input.display())))?;
            let mut corpus = Vec::new();
            for rec in reader.records() {
                let rec = rec.map_err(data(&input))?;
                corpus.push(preprocess(rec.get(col).unwrap_or(""), &table));
            }
            let order = NgramOrder::from_n(n).ok_or_else(|| CliError::Usage(format!("n must be 2 or 3, got {n}")))?;
            write_analysis(&out, &ngram_counts(&corpus, order, top_k, stop.as_ref()).to_csv())
        }
        AnalyzeCommand::Cooccur { input, out } => {
            let rows = read_label_rows(&input, true)?;
            let m = cooccurrence(&rows.labels).map_err(data(&input))?;
            write_analysis(&out, &m.to_csv())
        }
        AnalyzeCommand::Labelcounts { input, out } => {
            let rows = read_label_rows(&input, true)?;
            let d = label_count_distribution(&rows.labels).map_err(data(&input))?;
            write_analysis(&out, &d.to_csv())
        }
        AnalyzeCommand::Monthly { input, filter, out } => {
            let recs = dated_records(&input, &filter, true)?;
            let series = monthly_sentiments(&recs).map_err(data(&input))?;
            write_analysis(&out, &series.to_csv())
        }
        AnalyzeCommand::Cases {
            input,
            cases,
            filter,
            out,
        } => {
            let recs = dated_records(&input, &filter, false)?;
            let series = monthly_sentiments(&recs).map_err(data(&input))?;
            let counts = load_cases(open(&cases)?).map_err(data(&cases))?;
            let rows = tweets_vs_cases(&series, &counts).map_err(data(&cases))?;
            write_analysis(&out, &cases_to_csv(&rows))
        }
    }
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    for input in &a.input {
        let svg = report::render_file(input, &a.out_dir).map_err(|e| match e {
            report::ReportError::MissingInput(p) => CliError::Data(format!("missing input {}", p.display())),
            other => CliError::Data(format!("{}: {other}", input.display())),
        })?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn cmd_fixture(a: FixtureArgs) -> Result<(), CliError> {
    let (labeled, tweets) = make_fixture(a.seed, a.size);
    fs::create_dir_all(&a.out_dir).map_err(data(&a.out_dir))?;
    let create = |name: &str| -> Result<BufWriter<File>, CliError> {
        let p = a.out_dir.join(name);
        File::create(&p).map(BufWriter::new).map_err(data(&p))
    };
    corpus::write_labeled(&labeled, create("labeled.csv")?).map_err(data(&a.out_dir))?;
    corpus::write_tweets(&tweets, create("tweets.csv")?).map_err(data(&a.out_dir))?;
    write_file(&a.out_dir.join("glove.txt"), &corpus::fixture_embeddings(a.seed, a.dim))?;

    let in_range = filter_tweets(&tweets, None, None);
    let months: Vec<YearMonth> = {
        let mut m: Vec<YearMonth> = in_range.iter().map(|t| YearMonth::of(t.date)).collect();
        m.sort();
        m.dedup();
        m
    };
    let mut cases = String::from("year,month,cases\n");
    if let (Some(first), Some(last)) = (months.first(), months.last()) {
        for (i, m) in YearMonth::range(*first, *last).enumerate() {
            // made-up, monotone growth
            cases.push_str(&format!("{},{},{}\n", m.year, m.month, 1000 * (i as u64 + 1).pow(2)));
        }
    }
    write_file(&a.out_dir.join("cases.csv"), &cases)?;
    println!("wrote fixture ({} rows) to {}", labeled.len(), a.out_dir.display());
    Ok(())
}
