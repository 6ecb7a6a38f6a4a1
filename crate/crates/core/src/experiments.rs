//! Sweeps over quantizer resolution, asymptotic fits, and CSV/SVG output.
//!
//! Every row is a zero-wait evaluation of one (quantizer, code, N)
//! combination. Rows are produced in a fixed order regardless of how many
//! threads computed them, so CSV bodies are reproducible byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coder::{
    aoi_optimal_real_with, ceil_code, constant_length_for, shannon_integer, shannon_real, CodeKind, CodeLengths,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::quantizer::{build_lloyd_max, build_uniform_with, LloydMaxOptions, QuantizerKind, QuantizerSpec, RepPoints};
use crate::sampler::{aoi_analytic, zero_wait_condition, SamplingPolicy};
use crate::source::SourceModel;

/// CSV schema version, bumped whenever [`COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 12] = [
    "source_id",
    "quantizer_kind",
    "code_kind",
    "levels",
    "delta",
    "distortion",
    "log2_distortion",
    "entropy_bits",
    "aoi",
    "lower_bound",
    "zero_wait_margin",
    "moment_ratio",
];

/// The power-of-two grid used unless a dense sweep is requested.
pub const DEFAULT_LEVELS: [usize; 5] = [2, 4, 8, 16, 32];

pub fn dense_levels() -> Vec<usize> {
    (2..=32).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub source_id: String,
    pub quantizer_kind: QuantizerKind,
    pub code_kind: CodeKind,
    pub levels: usize,
    pub delta: Option<f64>,
    pub distortion: f64,
    pub log2_distortion: f64,
    pub entropy_bits: f64,
    /// Zero-wait AoI.
    pub aoi: f64,
    /// (3/2) H[Q(X)].
    pub lower_bound: f64,
    pub zero_wait_margin: f64,
    /// E[L^2] / E[L]^2.
    pub moment_ratio: f64,
}

/// Which codes each quantizer is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Uniform quantizers with Shannon/AoI-optimal codes, Lloyd-Max with
    /// constant-length codes.
    #[default]
    Figure,
    All,
}

impl Pairing {
    fn admits(self, quantizer: QuantizerKind, code: CodeKind) -> bool {
        match self {
            Pairing::All => true,
            Pairing::Figure => {
                let constant = matches!(code, CodeKind::ConstReal | CodeKind::ConstInt);
                (quantizer == QuantizerKind::LloydMax) == constant
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub levels: Vec<usize>,
    pub codes: Vec<CodeKind>,
    pub quantizers: Vec<QuantizerKind>,
    pub pairing: Pairing,
    pub reps: RepPoints,
    pub solver: SolverOptions,
    pub lloyd: LloydMaxOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            levels: DEFAULT_LEVELS.to_vec(),
            codes: vec![CodeKind::ShannonReal, CodeKind::AoiOptReal],
            quantizers: vec![QuantizerKind::Uniform],
            pairing: Pairing::Figure,
            reps: RepPoints::Centroid,
            solver: SolverOptions::default(),
            lloyd: LloydMaxOptions::default(),
        }
    }
}

fn build_quantizer(model: &SourceModel, kind: QuantizerKind, levels: usize, cfg: &SweepConfig) -> Result<QuantizerSpec> {
    match kind {
        QuantizerKind::Uniform => build_uniform_with(model, levels, cfg.reps),
        QuantizerKind::LloydMax => {
            let o = build_lloyd_max(model, levels, cfg.lloyd)?;
            if !o.converged {
                return Err(Error::Convergence(format!("Lloyd-Max stopped after {} iterations", o.iterations)));
            }
            Ok(o.spec)
        }
    }
}

/// Builds the requested code for `quant`, reusing `aoi_real` across the
/// real and integer AoI-optimal variants.
pub(crate) fn build_code(
    kind: CodeKind,
    quant: &QuantizerSpec,
    probs: &[f64],
    aoi_real: &mut Option<CodeLengths>,
    solver: SolverOptions,
) -> Result<CodeLengths> {
    match kind {
        CodeKind::ShannonReal => shannon_real(probs),
        CodeKind::ShannonInt => shannon_integer(probs),
        CodeKind::AoiOptReal | CodeKind::AoiOptInt => {
            if aoi_real.is_none() {
                *aoi_real = Some(aoi_optimal_real_with(probs, solver)?.code);
            }
            let real = aoi_real.as_ref().expect("just filled");
            Ok(if kind == CodeKind::AoiOptInt {
                ceil_code(probs, real)
            } else {
                real.clone()
            })
        }
        CodeKind::ConstReal => constant_length_for(probs, quant.levels, false),
        CodeKind::ConstInt => constant_length_for(probs, quant.levels, true),
    }
}

/// Evaluates one code on one quantizer under zero-wait sampling.
pub fn evaluate_row(source_id: &str, quant: &QuantizerSpec, kind: CodeKind, code: &CodeLengths) -> Result<SweepRow> {
    let probs = quant.active_probs();
    let report = aoi_analytic(&probs, code, SamplingPolicy::ZeroWait)?;
    Ok(SweepRow {
        source_id: source_id.to_string(),
        quantizer_kind: quant.kind,
        code_kind: kind,
        levels: quant.levels,
        delta: quant.cell_size,
        distortion: quant.distortion,
        log2_distortion: quant.distortion.log2(),
        entropy_bits: quant.entropy_bits,
        aoi: report.aoi,
        lower_bound: report.lower_bound,
        zero_wait_margin: zero_wait_condition(code).margin(),
        moment_ratio: code.moment_ratio(),
    })
}

/// One row per admitted (quantizer, code, N), ordered quantizer-major,
/// then code, then N as given.
pub fn run_sweep(model: &SourceModel, source_id: &str, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.levels.is_empty() {
        return Err(Error::param("levels list is empty"));
    }
    if let Some(&n) = cfg.levels.iter().find(|&&n| n < 2) {
        return Err(Error::param(format!("sweep levels must be at least 2, got {n}")));
    }

    let jobs: Vec<(QuantizerKind, usize)> = cfg
        .quantizers
        .iter()
        .flat_map(|&q| cfg.levels.iter().map(move |&n| (q, n)))
        .collect();

    let per_job: Vec<Result<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&(qk, n)| {
            let ctx = || format!("{source_id}/{}/N={n}", qk.as_str());
            let quant = build_quantizer(model, qk, n, cfg).map_err(|e| e.in_combination(ctx()))?;
            let probs = quant.active_probs();
            let mut aoi_real = None;
            let mut rows = Vec::new();
            for &ck in cfg.codes.iter().filter(|&&c| cfg.pairing.admits(qk, c)) {
                let code = build_code(ck, &quant, &probs, &mut aoi_real, cfg.solver)
                    .and_then(|c| evaluate_row(source_id, &quant, ck, &c))
                    .map_err(|e| e.in_combination(format!("{}/{}", ctx(), ck.as_str())))?;
                rows.push(code);
            }
            Ok(rows)
        })
        .collect();

    // regroup into quantizer -> code -> N order
    let mut rows_by_job = Vec::with_capacity(per_job.len());
    for r in per_job {
        rows_by_job.push(r?);
    }
    let mut out = Vec::new();
    for &qk in &cfg.quantizers {
        for &ck in cfg.codes.iter().filter(|&&c| cfg.pairing.admits(qk, c)) {
            for (job, rows) in jobs.iter().zip(&rows_by_job) {
                if job.0 == qk {
                    out.extend(rows.iter().filter(|r| r.code_kind == ck).cloned());
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub code_kind: CodeKind,
    /// Least-squares slope of AoI against log2 D over the largest N values.
    pub slope_estimate: f64,
    /// AoI + (3/2) log2 delta - (3/2) h(X) at the largest N.
    pub intercept_gap: f64,
    /// max over N of (integer-code AoI - real-code AoI) for this family.
    pub integer_gap_max: Option<f64>,
    /// AoI(Shannon-real) - AoI(AoI-optimal-real) at the largest N.
    pub shannon_vs_optimal_gap: Option<f64>,
    /// E[L^2]/E[L]^2 at the largest N.
    pub moment_ratio: f64,
    pub levels_used: Vec<usize>,
}

/// Least-squares slope of `y` on `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn family_rows<'a>(rows: &'a [SweepRow], code: CodeKind) -> BTreeMap<usize, &'a SweepRow> {
    rows.iter()
        .filter(|r| r.quantizer_kind == QuantizerKind::Uniform && r.code_kind == code)
        .map(|r| (r.levels, r))
        .collect()
}

pub fn fit_asymptotics(rows: &[SweepRow], model: &SourceModel, code: CodeKind) -> Result<AsymptoticsReport> {
    fit_asymptotics_with(rows, model, code, 3)
}

/// Fits the slope over the `window` largest N of the uniform-quantizer rows
/// for `code`.
pub fn fit_asymptotics_with(rows: &[SweepRow], model: &SourceModel, code: CodeKind, window: usize) -> Result<AsymptoticsReport> {
    if window < 2 {
        return Err(Error::param("slope window needs at least two points"));
    }
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.source_id != first.source_id) {
            return Err(Error::param("rows mix several sources"));
        }
    }
    let family = family_rows(rows, code);
    if family.len() < 3.max(window) {
        return Err(Error::param(format!(
            "need at least {} uniform-quantizer rows with distinct N for {}, got {}",
            3.max(window),
            code.as_str(),
            family.len()
        )));
    }
    let tail: Vec<&SweepRow> = family.values().rev().take(window).rev().copied().collect();
    let x: Vec<f64> = tail.iter().map(|r| r.log2_distortion).collect();
    let y: Vec<f64> = tail.iter().map(|r| r.aoi).collect();
    let slope_estimate = least_squares_slope(&x, &y);

    let last = *tail.last().expect("window is non-empty");
    let h = model.diff_entropy_bits();
    let intercept_gap = match last.delta {
        Some(d) => last.aoi + 1.5 * d.log2() - 1.5 * h,
        None => f64::NAN,
    };

    let real = code.real_counterpart();
    let int = match real {
        CodeKind::ShannonReal => Some(CodeKind::ShannonInt),
        CodeKind::AoiOptReal => Some(CodeKind::AoiOptInt),
        CodeKind::ConstReal => Some(CodeKind::ConstInt),
        _ => None,
    };
    let integer_gap_max = int.and_then(|ik| {
        let reals = family_rows(rows, real);
        let ints = family_rows(rows, ik);
        ints.iter()
            .filter_map(|(n, ir)| reals.get(n).map(|rr| ir.aoi - rr.aoi))
            .reduce(f64::max)
    });

    let shannon = family_rows(rows, CodeKind::ShannonReal);
    let optimal = family_rows(rows, CodeKind::AoiOptReal);
    let shannon_vs_optimal_gap = match (shannon.get(&last.levels), optimal.get(&last.levels)) {
        (Some(s), Some(o)) => Some(s.aoi - o.aoi),
        _ => None,
    };

    Ok(AsymptoticsReport {
        code_kind: code,
        slope_estimate,
        intercept_gap,
        integer_gap_max,
        shannon_vs_optimal_gap,
        moment_ratio: last.moment_ratio,
        levels_used: tail.iter().map(|r| r.levels).collect(),
    })
}

/// Ordered `# key: value` lines written above the CSV header.
pub type Metadata = Vec<(String, String)>;

/// Writes rows as CSV: `#` metadata lines, the column header, then rows in
/// order. Absent deltas are empty fields.
pub fn emit_csv(rows: &[SweepRow], path: &Path, metadata: &Metadata) -> Result<()> {
    let text = csv_string(rows, metadata).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn csv_string(rows: &[SweepRow], metadata: &Metadata) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# schema: age-distortion sweep v{CSV_SCHEMA_VERSION}").unwrap();
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let wrap = |source| Error::Csv {
        path: "<memory>".into(),
        source,
    };
    w.write_record(COLUMNS).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

/// Reads a CSV written by [`emit_csv`], skipping metadata lines.
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(wrap)?;
    r.deserialize().map(|row| row.map_err(wrap)).collect()
}

/// The body of a CSV file, i.e. everything after the metadata lines.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    /// Adds a (3/2) H series computed from the uniform-quantizer rows.
    pub lower_bound: bool,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn plot_series(rows: &[SweepRow], lower_bound: bool) -> Vec<Series> {
    let mut keys: Vec<(QuantizerKind, CodeKind)> = Vec::new();
    for r in rows {
        let k = (r.quantizer_kind, r.code_kind);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut series: Vec<Series> = keys
        .iter()
        .map(|&(q, c)| {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.quantizer_kind == q && r.code_kind == c)
                .map(|r| (r.log2_distortion, r.aoi))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("{} + {}", q.as_str(), c.as_str()),
                points,
            }
        })
        .collect();
    if lower_bound {
        let mut by_n: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.quantizer_kind == QuantizerKind::Uniform) {
            by_n.entry(r.levels).or_insert((r.log2_distortion, r.lower_bound));
        }
        if !by_n.is_empty() {
            let mut points: Vec<(f64, f64)> = by_n.into_values().collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            series.push(Series {
                label: "(3/2) H[Q_uni]".to_string(),
                points,
            });
        }
    }
    series
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

/// Renders AoI against log2 D as a self-contained SVG document.
pub fn svg_string(rows: &[SweepRow], opts: &PlotOptions) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 200.0, 40.0, 55.0);
    let series = plot_series(rows, opts.lower_bound);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad_x = 0.05 * (x1 - x0).max(1e-9);
    let pad_y = 0.05 * (y1 - y0).max(1e-9);
    let (x0, x1, y0, y1) = (x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (ml + w - mr) / 2.0, escape(&opts.title)).unwrap();
    writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    )
    .unwrap();
    for t in nice_ticks(x0, x1, 8) {
        let x = px(t);
        writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{mt}" stroke="#e0e0e0"/>"##, h - mb).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, h - mb + 16.0).unwrap();
    }
    for t in nice_ticks(y0, y1, 8) {
        let y = py(t);
        writeln!(s, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, w - mr).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, ml - 6.0, y + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log2 D</text>"#, (ml + w - mr) / 2.0, h - 12.0).unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">AoI</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    )
    .unwrap();

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if ser.label.starts_with('(') { r#" stroke-dasharray="5,4""# } else { "" };
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        writeln!(s, r#"<g class="series" data-label="{}">"#, escape(&ser.label)).unwrap();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" ")).unwrap();
        for &(x, y) in &ser.points {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y)).unwrap();
        }
        writeln!(s, "</g>").unwrap();
        let ly = mt + 10.0 + 18.0 * i as f64;
        let lx = w - mr + 12.0;
        writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 22.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&ser.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot(rows: &[SweepRow], path: &Path, opts: &PlotOptions) -> Result<()> {
    fs::write(path, svg_string(rows, opts)).map_err(|e| Error::io(path, e))
}
