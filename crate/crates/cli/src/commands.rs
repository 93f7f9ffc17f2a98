//! Implementations behind each subcommand. Every function reads its inputs,
//! writes its outputs, and returns a small summary for the caller to print.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use advkit::ingest::{self, BuiltCorpus, CleanOutcome, CorpusStats, Rejection};
use advkit::metrics::{self, AdvPattern, Column, ConfusionMatrix, FeatureRows, Ranking};
use advkit::quantizer::{fit_linear_quantizer, CoverageReport, FitReport};
use advkit::sequencing::assemble;
use advkit::{coverage, fit_quantizer, fit_quantizer_with_k, AdvPoint, QuantizerModel};
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to a file when a path is given, stdout otherwise.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write(path, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item)?);
        out.push('\n');
    }
    Ok(out)
}

/// Manifest → cleaned rows → records.
pub struct LoadedCorpus {
    pub cleaned: CleanOutcome,
    pub built: BuiltCorpus,
}

impl LoadedCorpus {
    pub fn rejections(&self) -> &[Rejection] {
        &self.cleaned.rejected
    }

    pub fn adv_points(&self) -> Vec<AdvPoint> {
        self.built.records.iter().filter_map(|r| r.adv).collect()
    }
}

pub fn load_corpus(manifest: &Path, cfg: &PipelineConfig) -> Result<LoadedCorpus> {
    let parsed = ingest::parse_manifest(&read(manifest)?);
    let mut malformed = parsed.malformed_rejections();
    let mut cleaned = ingest::clean_manifest(parsed.rows, &cfg.cleaning);
    malformed.append(&mut cleaned.rejected);
    cleaned.rejected = malformed;
    let built = ingest::build_records(&cleaned.kept, &cfg.vocabulary()?, &cfg.ranges)?;
    Ok(LoadedCorpus { cleaned, built })
}

// ---------------------------------------------------------------- clean

pub struct CleanSummary {
    pub kept: usize,
    pub rejected: usize,
}

pub fn clean(manifest: &Path, cfg: &PipelineConfig, kept_out: &Path, rejects_out: &Path) -> Result<CleanSummary> {
    let parsed = ingest::parse_manifest(&read(manifest)?);
    let mut rejected = parsed.malformed_rejections();
    let cleaned = ingest::clean_manifest(parsed.rows, &cfg.cleaning);
    rejected.extend(cleaned.rejected);
    write(kept_out, &jsonl(&cleaned.kept)?)?;
    write(rejects_out, &jsonl(&rejected)?)?;
    Ok(CleanSummary { kept: cleaned.kept.len(), rejected: rejected.len() })
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Pick K by the silhouette sweep.
    Select,
    /// Force K bins per axis with the clustering-based boundaries.
    Fixed(usize),
    /// Equal-width bins.
    Linear(usize),
}

pub fn fit(manifest: &Path, cfg: &PipelineConfig, mode: FitMode, out: &Path) -> Result<QuantizerModel> {
    let corpus = load_corpus(manifest, cfg)?;
    let points = corpus.adv_points();
    if points.len() < 8 {
        bail!("insufficient samples: {} ADV-annotated records, need at least 8", points.len());
    }
    let model = match mode {
        FitMode::Select => fit_quantizer(&points, &cfg.quantizer)?,
        FitMode::Fixed(k) => fit_quantizer_with_k(&points, k, &cfg.quantizer)?,
        FitMode::Linear(m) => fit_linear_quantizer(&points, m)?,
    };
    write(out, &model.to_json())?;
    write(&report_path(out), &fit_report_text(&model))?;
    Ok(model)
}

pub fn report_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.file_stem().unwrap_or_default().to_os_string();
    name.push(".report.txt");
    model_path.with_file_name(name)
}

pub fn fit_report_text(model: &QuantizerModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind: {:?}", model.kind);
    let _ = writeln!(s, "selected K: {}", model.k);
    if let Some(FitReport { n_points, k_max, probes, .. }) = &model.fit_report {
        let _ = writeln!(s, "points: {n_points}  K_max: {k_max}");
        let _ = writeln!(s, "{:>4} {:>12} {:>12} {:>5} {:>8}", "k", "silhouette", "std", "runs", "refined");
        for p in probes {
            let _ = writeln!(
                s,
                "{:>4} {:>12.6} {:>12.6} {:>5} {:>8}",
                p.k, p.mean_silhouette, p.std_silhouette, p.runs, p.refined
            );
        }
    }
    for (name, b) in [("a", &model.boundaries.a), ("d", &model.boundaries.d), ("v", &model.boundaries.v)] {
        let list: Vec<String> = b.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(s, "boundaries {name}: [{}]", list.join(", "));
    }
    for w in &model.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn load_model(path: &Path) -> Result<QuantizerModel> {
    QuantizerModel::from_json(&read(path)?).with_context(|| format!("loading model {}", path.display()))
}

// ---------------------------------------------------------------- quantize / coverage

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub a: f64,
    pub d: f64,
    pub v: f64,
}

/// Parses a JSON-lines file of `{"id"?, "a", "d", "v"}`; bad lines are logged and skipped.
pub fn read_points(path: &Path) -> Result<(Vec<PointRow>, usize)> {
    let mut rows = Vec::new();
    let mut bad = 0;
    for (i, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PointRow>(line) {
            Ok(p) if AdvPoint::new(p.a, p.d, p.v).is_finite() => rows.push(p),
            Ok(_) => {
                log::warn!("{}:{}: non-finite coordinate", path.display(), i + 1);
                bad += 1;
            }
            Err(e) => {
                log::warn!("{}:{}: {e}", path.display(), i + 1);
                bad += 1;
            }
        }
    }
    Ok((rows, bad))
}

#[derive(Serialize)]
struct QuantizedRow<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'a str>,
    a: f64,
    d: f64,
    v: f64,
    x_a: u32,
    x_d: u32,
    x_v: u32,
}

pub fn quantize(model: &QuantizerModel, points: &[PointRow]) -> Result<String> {
    jsonl(points.iter().map(|p| {
        let t = model.quantize(&AdvPoint::new(p.a, p.d, p.v));
        QuantizedRow { id: p.id.as_deref(), a: p.a, d: p.d, v: p.v, x_a: t.a, x_d: t.d, x_v: t.v }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Lines,
    Grid,
}

pub fn coverage_report(model: &QuantizerModel, points: &[AdvPoint]) -> CoverageReport {
    coverage(points, model)
}

#[derive(Serialize)]
struct CoverageSummary {
    m: u32,
    samples: usize,
    occupied_units: usize,
    total_units: usize,
    coverage_rate: f64,
    occupancy_entropy: f64,
}

#[derive(Serialize)]
struct UnitRow {
    x_a: u32,
    x_d: u32,
    x_v: u32,
    count: usize,
}

pub fn format_coverage(report: &CoverageReport, format: OutputFormat) -> Result<String> {
    let summary = CoverageSummary {
        m: report.m,
        samples: report.samples,
        occupied_units: report.occupied_units,
        total_units: report.total_units,
        coverage_rate: report.coverage_rate,
        occupancy_entropy: report.occupancy_entropy(),
    };
    match format {
        OutputFormat::Lines => {
            let mut out = jsonl([&summary])?;
            out.push_str(&jsonl(
                report.occupancy_histogram.iter().map(|(t, &count)| UnitRow { x_a: t.a, x_d: t.d, x_v: t.v, count }),
            )?);
            Ok(out)
        }
        OutputFormat::Grid => {
            let mut s = format!(
                "coverage {:.4} ({} of {} units, {} samples)\n",
                report.coverage_rate, report.occupied_units, report.total_units, report.samples
            );
            let m = report.m as usize;
            for (v, slice) in report.grid_slices().iter().enumerate() {
                let _ = writeln!(s, "\nx_v = {}  (rows x_a = {m}..1, columns x_d = 1..{m})", v + 1);
                for (a, row) in slice.iter().enumerate().rev() {
                    let _ = write!(s, "{:>3} |", a + 1);
                    for &c in row {
                        if c == 0 {
                            s.push_str("    .");
                        } else {
                            let _ = write!(s, "{c:>5}");
                        }
                    }
                    s.push('\n');
                }
            }
            Ok(s)
        }
    }
}

// ---------------------------------------------------------------- assemble

#[derive(Deserialize)]
struct SemanticRow {
    id: String,
    tokens: Vec<u32>,
}

pub struct AssembleSummary {
    pub written: usize,
    pub failed: usize,
}

/// Assembles every record that has semantic tokens; per-row failures are logged.
pub fn assemble_manifest(
    manifest: &Path,
    semantic: &Path,
    model: &QuantizerModel,
    cfg: &PipelineConfig,
    out: Option<&Path>,
) -> Result<AssembleSummary> {
    cfg.layout.validate()?;
    let corpus = load_corpus(manifest, cfg)?;
    let mut sem: HashMap<String, Vec<u32>> = HashMap::new();
    for (i, line) in read(semantic)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SemanticRow>(line) {
            Ok(row) => {
                sem.insert(row.id, row.tokens);
            }
            Err(e) => log::warn!("{}:{}: {e}", semantic.display(), i + 1),
        }
    }
    let mut pairs = Vec::new();
    let mut failed = 0;
    for record in &corpus.built.records {
        let Some(tokens) = sem.get(&record.id) else {
            log::warn!("record {}: no semantic tokens", record.id);
            failed += 1;
            continue;
        };
        match assemble(record, tokens, &cfg.layout, model) {
            Ok(pair) => pairs.push(pair),
            Err(e) => {
                log::warn!("record {}: {e}", record.id);
                failed += 1;
            }
        }
    }
    emit(out, &jsonl(&pairs)?)?;
    Ok(AssembleSummary { written: pairs.len(), failed })
}

// ---------------------------------------------------------------- stats

pub fn stats(manifest: &Path, cfg: &PipelineConfig, bins: usize) -> Result<CorpusStats> {
    let corpus = load_corpus(manifest, cfg)?;
    Ok(ingest::corpus_stats(&corpus.built.records, bins))
}

// ---------------------------------------------------------------- metrics

/// One ranking per line: integers separated by commas or whitespace, optionally bracketed.
pub fn read_rankings(path: &Path) -> Result<Vec<Ranking>> {
    let mut out = Vec::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let line = line.trim().trim_start_matches('[').trim_end_matches(']');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ranks = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: bad rank", path.display(), i + 1))?;
        out.push(Ranking::new(ranks).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SrcLine {
    line: usize,
    src: f64,
}

/// Line-by-line SRC between two ranking files; a single-line file is compared against every line of the other.
pub fn metric_src(a: &Path, b: &Path) -> Result<String> {
    let (ra, rb) = (read_rankings(a)?, read_rankings(b)?);
    let pairs: Vec<(&Ranking, &Ranking)> = match (ra.len(), rb.len()) {
        (0, _) | (_, 0) => bail!("empty ranking file"),
        (1, _) => rb.iter().map(|r| (&ra[0], r)).collect(),
        (_, 1) => ra.iter().map(|r| (r, &rb[0])).collect(),
        (x, y) if x == y => ra.iter().zip(&rb).collect(),
        (x, y) => bail!("ranking files have {x} and {y} lines"),
    };
    let lines: Vec<SrcLine> = pairs
        .iter()
        .enumerate()
        .map(|(i, (x, y))| Ok(SrcLine { line: i + 1, src: metrics::spearman_src(x, y)? }))
        .collect::<Result<_>>()?;
    let mean = lines.iter().map(|l| l.src).sum::<f64>() / lines.len() as f64;
    let mut out = jsonl(&lines)?;
    out.push_str(&jsonl([serde_json::json!({ "mean_src": mean })])?);
    Ok(out)
}

pub fn metric_kw(path: &Path) -> Result<String> {
    let rankings = read_rankings(path)?;
    let w = metrics::kendalls_w(&rankings)?;
    jsonl([serde_json::json!({ "raters": rankings.len(), "n": rankings[0].len(), "kendalls_w": w })])
}

pub fn metric_macro_pr(path: &Path) -> Result<String> {
    let mut rows = Vec::new();
    for line in read(path)?.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .context("confusion matrix entries must be non-negative integers")?;
        rows.push(row);
    }
    let scores = metrics::macro_pr(&ConfusionMatrix::new(rows)?)?;
    jsonl([scores])
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let records = reader.records().collect::<Result<Vec<_>, _>>()?;
    Ok((headers, records))
}

fn numeric_column(records: &[csv::StringRecord], idx: usize, name: &str) -> Result<Vec<f64>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.get(idx)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| anyhow!("row {}: column {name:?} is not numeric", i + 2))
        })
        .collect()
}

/// Pearson matrix of the ADV token columns against every other column.
pub fn metric_pearson(table: &Path, adv_columns: &[String]) -> Result<metrics::CorrelationMatrix> {
    let (headers, records) = read_csv(table)?;
    let mut adv = Vec::new();
    let mut features = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        let col = Column::new(name.clone(), numeric_column(&records, i, name)?);
        if adv_columns.contains(name) {
            adv.push(col);
        } else {
            features.push(col);
        }
    }
    if adv.len() != adv_columns.len() {
        bail!("table lacks some of the ADV columns {adv_columns:?}");
    }
    // Keep rows in the requested order.
    adv.sort_by_key(|c| adv_columns.iter().position(|n| n == &c.name));
    Ok(metrics::pearson_matrix(&features, &adv)?)
}

/// Delta table from a CSV with `emotion`, `pattern` (empty or `baseline` for
/// reference rows) and feature columns.
pub fn metric_deltas(table: &Path) -> Result<metrics::DeltaReport> {
    let (headers, records) = read_csv(table)?;
    let find = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("missing column {name:?}"));
    let (emotion_idx, pattern_idx) = (find("emotion")?, find("pattern")?);
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != emotion_idx && i != pattern_idx).collect();
    let features: Vec<String> = feature_idx.iter().map(|&i| headers[i].clone()).collect();
    let empty = || FeatureRows { features: features.clone(), rows: Vec::new() };

    let mut baseline: BTreeMap<String, FeatureRows> = BTreeMap::new();
    let mut perturbed: BTreeMap<(String, AdvPattern), FeatureRows> = BTreeMap::new();
    for (line, r) in records.iter().enumerate() {
        let values = feature_idx
            .iter()
            .map(|&i| r.get(i).unwrap_or("").parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| anyhow!("row {}: non-numeric feature", line + 2))?;
        let emotion = r.get(emotion_idx).unwrap_or("").to_string();
        let pattern = r.get(pattern_idx).unwrap_or("");
        if pattern.is_empty() || pattern.eq_ignore_ascii_case("baseline") {
            baseline.entry(emotion).or_insert_with(empty).rows.push(values);
        } else {
            let p: AdvPattern = pattern.parse()?;
            perturbed.entry((emotion, p)).or_insert_with(empty).rows.push(values);
        }
    }
    Ok(metrics::perturbation_deltas(&baseline, &perturbed)?)
}

pub fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    read(path)?
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("{}: bad number {s:?}", path.display())))
        .collect()
}
