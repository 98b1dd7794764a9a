//! Deterministic SVG rendering of the analytics CSVs.
//!
//! The chart kind is recognised from the CSV header, so every SVG has a CSV
//! twin with the same stem. Output depends only on the input bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::labels::{LABEL_NAMES, NUM_LABELS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error("unrecognised chart header {0:?}")]
    UnknownChart(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One colour per label, in label order.
pub const PALETTE: [&str; NUM_LABELS] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// `ngram,count` or `labels,count,percent`.
    Bar,
    /// `label,<11 labels>`.
    Heatmap,
    /// `month,tweet_count,<11 labels>`.
    MonthlyGroups,
    /// `month,tweets,cases`.
    Cases,
}

pub fn detect_kind(header: &[&str]) -> Option<ChartKind> {
    let labels_follow = |from: usize| {
        header.len() == from + NUM_LABELS && header[from..].iter().zip(LABEL_NAMES).all(|(h, l)| *h == l)
    };
    match header {
        ["ngram", "count"] | ["labels", "count", "percent"] => Some(ChartKind::Bar),
        ["month", "tweets", "cases"] => Some(ChartKind::Cases),
        ["label", ..] if labels_follow(1) => Some(ChartKind::Heatmap),
        ["month", "tweet_count", ..] if labels_follow(2) => Some(ChartKind::MonthlyGroups),
        _ => None,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open_svg(width: u32, height: u32, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2,
        escape(title)
    )
    .unwrap();
    s
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        1.0
    } else {
        v
    }
}

/// Horizontal bars, one per row, in input order.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let row_h = 18.0;
    let left = 170.0;
    let plot_w = 400.0;
    let height = 40 + (labels.len() as f64 * row_h) as u32 + 20;
    let mut s = open_svg(640, height, title);
    let max = nice_max(values.iter().cloned().fold(0.0, f64::max));
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = 40.0 + i as f64 * row_h;
        let w = plot_w * v.max(0.0) / max;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 12.0,
            escape(label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect class="bar" x="{left:.1}" y="{:.1}" width="{w:.2}" height="{:.1}" fill="{}"/>"#,
            y + 2.0,
            row_h - 4.0,
            PALETTE[0]
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, left + w + 4.0, y + 12.0, fmt_value(v)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// One group per row, one bar per series inside each group.
pub fn grouped_bars(title: &str, groups: &[String], series: &[&str], values: &[Vec<f64>]) -> String {
    let bar_w = 6.0;
    let group_w = bar_w * series.len() as f64 + 12.0;
    let left = 50.0;
    let top = 40.0;
    let plot_h: f64 = 260.0;
    let legend_h = 16.0 * series.len() as f64;
    let width = (left + group_w * groups.len() as f64 + 150.0) as u32;
    let height = (top + plot_h + 40.0).max(top + legend_h + 10.0) as u32;
    let mut s = open_svg(width, height, title);
    let max = nice_max(values.iter().flatten().cloned().fold(0.0, f64::max));
    let base = top + plot_h;
    writeln!(s, r#"<line x1="{left}" y1="{base}" x2="{:.1}" y2="{base}" stroke="black"/>"#, left + group_w * groups.len() as f64).unwrap();
    for (g, (name, row)) in groups.iter().zip(values).enumerate() {
        let gx = left + g as f64 * group_w + 6.0;
        writeln!(s, r#"<g class="group" data-key="{}">"#, escape(name)).unwrap();
        for (k, &v) in row.iter().enumerate() {
            let h = plot_h * v.max(0.0) / max;
            writeln!(
                s,
                r#"<rect class="bar" x="{:.1}" y="{:.2}" width="{bar_w}" height="{h:.2}" fill="{}"/>"#,
                gx + k as f64 * bar_w,
                base - h,
                PALETTE[k % PALETTE.len()]
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + bar_w * series.len() as f64 / 2.0,
            base + 16.0,
            escape(name)
        )
        .unwrap();
        s.push_str("</g>\n");
    }
    let lx = left + group_w * groups.len() as f64 + 20.0;
    for (k, name) in series.iter().enumerate() {
        let y = top + k as f64 * 16.0;
        writeln!(s, r#"<rect x="{lx:.1}" y="{y:.1}" width="10" height="10" fill="{}"/>"#, PALETTE[k % PALETTE.len()]).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 14.0, y + 9.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Square colour grid; intensity is proportional to the cell value.
pub fn heatmap(title: &str, labels: &[&str], matrix: &[Vec<f64>]) -> String {
    let cell = 36.0;
    let left = 120.0;
    let top = 130.0;
    let n = labels.len() as f64;
    let size = (left + cell * n + 20.0) as u32;
    let mut s = open_svg(size, (top + cell * n + 20.0) as u32, title);
    let max = nice_max(matrix.iter().flatten().cloned().fold(0.0, f64::max));
    for (i, name) in labels.iter().enumerate() {
        let y = top + i as f64 * cell;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 6.0, y + cell / 2.0 + 4.0, escape(name)).unwrap();
        let x = left + i as f64 * cell + cell / 2.0;
        writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" transform="rotate(-60 {x:.1} {:.1})">{}</text>"#,
            top - 6.0,
            top - 6.0,
            escape(name)
        )
        .unwrap();
    }
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = (v.max(0.0) / max).clamp(0.0, 1.0);
            // white to deep red
            let g = (255.0 * (1.0 - t)).round() as u8;
            let r = (255.0 - 75.0 * t).round() as u8;
            writeln!(
                s,
                r##"<rect class="cell" x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{g:02x}" stroke="#dddddd"/>"##,
                left + j as f64 * cell,
                top + i as f64 * cell
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"#,
                left + j as f64 * cell + cell / 2.0,
                top + i as f64 * cell + cell / 2.0 + 3.0,
                fmt_value(v)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Tweet counts as bars, case counts as a line on a second scale.
pub fn cases_chart(title: &str, months: &[String], tweets: &[f64], cases: &[f64]) -> String {
    let slot = 60.0;
    let left = 60.0;
    let top = 40.0;
    let plot_h = 240.0;
    let width = (left * 2.0 + slot * months.len() as f64) as u32;
    let mut s = open_svg(width, (top + plot_h + 50.0) as u32, title);
    let tmax = nice_max(tweets.iter().cloned().fold(0.0, f64::max));
    let cmax = nice_max(cases.iter().cloned().fold(0.0, f64::max));
    let base = top + plot_h;
    let mut points = Vec::new();
    for (i, m) in months.iter().enumerate() {
        let x = left + i as f64 * slot;
        let h = plot_h * tweets[i].max(0.0) / tmax;
        writeln!(
            s,
            r#"<rect class="bar" x="{:.1}" y="{:.2}" width="{:.1}" height="{h:.2}" fill="{}"/>"#,
            x + 10.0,
            base - h,
            slot - 20.0,
            PALETTE[0]
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x + slot / 2.0, base + 16.0, escape(m)).unwrap();
        points.push(format!("{:.1},{:.2}", x + slot / 2.0, base - plot_h * cases[i].max(0.0) / cmax));
    }
    writeln!(
        s,
        r#"<polyline class="cases" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        points.join(" "),
        PALETTE[3]
    )
    .unwrap();
    writeln!(s, r#"<text x="{left}" y="{:.1}" fill="{}">tweets (bars)</text>"#, base + 36.0, PALETTE[0]).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{}">cases (line)</text>"#, left + 120.0, base + 36.0, PALETTE[3]).unwrap();
    s.push_str("</svg>\n");
    s
}

fn parse_num(v: &str, line: usize) -> Result<f64, ReportError> {
    v.trim().parse::<f64>().map_err(|_| ReportError::Malformed {
        line,
        message: format!("not a number: {v:?}"),
    })
}

/// Renders one analytics CSV, returning the detected kind and the SVG text.
pub fn render_csv(text: &str, title: &str) -> Result<(ChartKind, String), ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let kind = detect_kind(&cols).ok_or_else(|| ReportError::UnknownChart(cols.join(",")))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?);
    }
    let first_col = |rows: &[csv::StringRecord]| rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>();
    let numbers = |rows: &[csv::StringRecord], from: usize, to: usize| -> Result<Vec<Vec<f64>>, ReportError> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| (from..to).map(|c| parse_num(&r[c], i + 2)).collect())
            .collect()
    };
    let svg = match kind {
        ChartKind::Bar => {
            let values: Vec<f64> = numbers(&rows, 1, 2)?.into_iter().map(|r| r[0]).collect();
            bar_chart(title, &first_col(&rows), &values)
        }
        ChartKind::Heatmap => {
            if rows.len() != NUM_LABELS {
                return Err(ReportError::Malformed {
                    line: rows.len() + 1,
                    message: format!("heatmap needs {NUM_LABELS} rows"),
                });
            }
            heatmap(title, &LABEL_NAMES, &numbers(&rows, 1, 1 + NUM_LABELS)?)
        }
        ChartKind::MonthlyGroups => {
            grouped_bars(title, &first_col(&rows), &LABEL_NAMES, &numbers(&rows, 2, 2 + NUM_LABELS)?)
        }
        ChartKind::Cases => {
            let v = numbers(&rows, 1, 3)?;
            let tweets: Vec<f64> = v.iter().map(|r| r[0]).collect();
            let cases: Vec<f64> = v.iter().map(|r| r[1]).collect();
            cases_chart(title, &first_col(&rows), &tweets, &cases)
        }
    };
    Ok((kind, svg))
}

/// Renders `input` into `out_dir/<stem>.svg` and places the CSV twin
/// alongside it. Returns the SVG path.
pub fn render_file(input: &Path, out_dir: &Path) -> Result<PathBuf, ReportError> {
    if !input.is_file() {
        return Err(ReportError::MissingInput(input.to_path_buf()));
    }
    let text = fs::read_to_string(input)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("chart").to_string();
    let (_, svg) = render_csv(&text, &stem.replace(['_', '-'], " "))?;
    fs::create_dir_all(out_dir)?;
    let svg_path = out_dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg)?;
    let twin = out_dir.join(format!("{stem}.csv"));
    let same = match (fs::canonicalize(input), fs::canonicalize(&twin)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if !same {
        fs::write(twin, text)?;
    }
    Ok(svg_path)
}
