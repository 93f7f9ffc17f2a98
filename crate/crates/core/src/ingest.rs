//! Manifest loading, corpus cleaning, and record construction.
//!
//! Manifests are JSON lines, one utterance per line:
//!
//! ```text
//! {"id":"u1","dataset":"podcast","dataset_type":"S_AL","speaker":"spk7","label":"Happy",
//!  "adv_a":4.5,"adv_d":3.0,"adv_v":5.5,"duration_s":3.2,"text_token_ids":[17,42,9]}
//! ```
//!
//! Missing `adv_*` fields mean the row carries no ADV annotation. Two optional
//! fields are honoured: `text` (ignored) and `upstream_flag` (rows pre-marked by
//! audio tooling for overlap, music, noise or foreign language are dropped).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::adv::{normalize_adv, AdvPoint, Axis, AxisRanges, DatasetType, ADV_MAX, ADV_MIN};
use crate::error::{Error, Result};
use crate::quantizer::PerAxis;
use crate::vocab::LabelVocabulary;

/// One manifest line as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifestRow {
    pub id: String,
    pub dataset: String,
    pub dataset_type: DatasetType,
    pub speaker: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adv_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adv_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adv_v: Option<f64>,
    pub duration_s: f64,
    pub text_token_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub upstream_flag: bool,
}

impl SampleManifestRow {
    /// The ADV triple, if all three fields are present.
    pub fn raw_adv(&self) -> Option<[f64; 3]> {
        match (self.adv_a, self.adv_d, self.adv_v) {
            (Some(a), Some(d), Some(v)) => Some([a, d, v]),
            _ => None,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        let present = [self.adv_a, self.adv_d, self.adv_v].iter().filter(|x| x.is_some()).count();
        if present != 0 && present != 3 {
            return Err("adv_a/adv_d/adv_v must be all present or all absent".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    Malformed,
    UpstreamFlag,
    Duration,
    NoTranscript,
    UnknownSpeaker,
    SparseSpeaker,
}

/// A line that failed to parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalformedLine {
    pub line: usize,
    pub raw: String,
    pub error: String,
}

/// A rejection-log entry: the offending row plus its reason code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    #[serde(flatten)]
    pub row: RejectedRow,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RejectedRow {
    Row(SampleManifestRow),
    Malformed(MalformedLine),
}

/// Parsed rows plus lines that could not be parsed.
#[derive(Debug, Clone, Default)]
pub struct ParsedManifest {
    pub rows: Vec<SampleManifestRow>,
    pub malformed: Vec<MalformedLine>,
}

impl ParsedManifest {
    pub fn malformed_rejections(&self) -> Vec<Rejection> {
        self.malformed
            .iter()
            .map(|m| Rejection { row: RejectedRow::Malformed(m.clone()), reason: RejectReason::Malformed })
            .collect()
    }
}

/// Parses a JSON-lines manifest. Bad lines are collected, never fatal.
pub fn parse_manifest(text: &str) -> ParsedManifest {
    let mut out = ParsedManifest::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<SampleManifestRow>(line)
            .map_err(|e| e.to_string())
            .and_then(|row| row.check().map(|_| row));
        match parsed {
            Ok(row) => out.rows.push(row),
            Err(error) => {
                log::warn!("manifest line {}: {error}", i + 1);
                out.malformed.push(MalformedLine { line: i + 1, raw: line.to_string(), error });
            }
        }
    }
    out
}

/// Thresholds applied by [`clean_manifest`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningPolicy {
    pub max_duration_s: f64,
    pub min_speaker_utterances: usize,
    pub unknown_speaker: String,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self { max_duration_s: 30.0, min_speaker_utterances: 4, unknown_speaker: "Unknown".into() }
    }
}

/// Output of [`clean_manifest`].
#[derive(Debug, Clone, Default)]
pub struct CleanOutcome {
    pub kept: Vec<SampleManifestRow>,
    pub rejected: Vec<Rejection>,
}

impl CleanOutcome {
    pub fn reason_counts(&self) -> BTreeMap<RejectReason, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rejected {
            *counts.entry(r.reason).or_insert(0) += 1;
        }
        counts
    }
}

fn row_reason(row: &SampleManifestRow, policy: &CleaningPolicy) -> Option<RejectReason> {
    if row.check().is_err() {
        Some(RejectReason::Malformed)
    } else if row.upstream_flag {
        Some(RejectReason::UpstreamFlag)
    } else if row.duration_s > policy.max_duration_s {
        Some(RejectReason::Duration)
    } else if row.text_token_ids.is_empty() {
        Some(RejectReason::NoTranscript)
    } else if row.speaker.trim() == policy.unknown_speaker {
        Some(RejectReason::UnknownSpeaker)
    } else {
        None
    }
}

/// Applies the per-row filters, then drops speakers left with too few
/// utterances until no further speaker falls below the threshold.
pub fn clean_manifest(rows: Vec<SampleManifestRow>, policy: &CleaningPolicy) -> CleanOutcome {
    let mut rejected = Vec::new();
    let mut kept = Vec::with_capacity(rows.len());
    for row in rows {
        match row_reason(&row, policy) {
            Some(reason) => rejected.push(Rejection { row: RejectedRow::Row(row), reason }),
            None => kept.push(row),
        }
    }

    loop {
        let mut per_speaker: HashMap<&str, usize> = HashMap::new();
        for row in &kept {
            *per_speaker.entry(row.speaker.as_str()).or_insert(0) += 1;
        }
        let sparse: Vec<bool> =
            kept.iter().map(|r| per_speaker[r.speaker.as_str()] < policy.min_speaker_utterances).collect();
        if !sparse.contains(&true) {
            break;
        }
        let mut next = Vec::with_capacity(kept.len());
        for (row, drop) in kept.into_iter().zip(sparse) {
            if drop {
                rejected.push(Rejection { row: RejectedRow::Row(row), reason: RejectReason::SparseSpeaker });
            } else {
                next.push(row);
            }
        }
        kept = next;
    }
    CleanOutcome { kept, rejected }
}

/// One cleaned, normalized utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub dataset_type: DatasetType,
    pub text_token_ids: Vec<u32>,
    pub speaker_id: u32,
    pub label_token: u32,
    pub adv: Option<AdvPoint>,
}

/// Raw ADV ranges, per dataset with a fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RangeTable {
    pub default: AxisRanges,
    pub datasets: BTreeMap<String, AxisRanges>,
}

impl RangeTable {
    pub fn for_dataset(&self, dataset: &str) -> &AxisRanges {
        self.datasets.get(dataset).unwrap_or(&self.default)
    }
}

/// Records plus bookkeeping from [`build_records`].
#[derive(Debug, Clone, Default)]
pub struct BuiltCorpus {
    pub records: Vec<SampleRecord>,
    /// Speaker strings in dense-id order.
    pub speakers: Vec<String>,
    /// Number of individual ADV values clamped into range.
    pub clamped_values: usize,
}

/// Unifies labels, normalizes ADV, and assigns dense speaker ids in first-seen order.
pub fn build_records(rows: &[SampleManifestRow], vocab: &LabelVocabulary, ranges: &RangeTable) -> Result<BuiltCorpus> {
    let mut out = BuiltCorpus::default();
    let mut speaker_ids: HashMap<&str, u32> = HashMap::new();
    for row in rows {
        let invalid = |reason: String| Error::InvalidRecord { id: row.id.clone(), reason };
        let adv = match (row.dataset_type.has_adv(), row.raw_adv()) {
            (true, Some(raw)) => {
                let n = normalize_adv(raw, ranges.for_dataset(&row.dataset)).map_err(|e| invalid(e.to_string()))?;
                out.clamped_values += n.clamped_axes;
                Some(n.point)
            }
            (true, None) => return Err(invalid(format!("{} row without ADV values", row.dataset_type))),
            (false, Some(_)) => return Err(invalid(format!("{} row carries ADV values", row.dataset_type))),
            (false, None) => None,
        };
        let label_token = vocab.unify(&row.label).map_err(|e| invalid(e.to_string()))?;
        let next = speaker_ids.len() as u32;
        let speaker_id = *speaker_ids.entry(row.speaker.as_str()).or_insert_with(|| {
            out.speakers.push(row.speaker.clone());
            next
        });
        out.records.push(SampleRecord {
            id: row.id.clone(),
            dataset_type: row.dataset_type,
            text_token_ids: row.text_token_ids.clone(),
            speaker_id,
            label_token,
            adv,
        });
    }
    if out.clamped_values > 0 {
        log::warn!("{} ADV values clamped into their configured ranges", out.clamped_values);
    }
    Ok(out)
}

/// Fixed-width histogram over `[lo, hi]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self { lo, hi, counts: vec![0; bins] }
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let pos = ((x - self.lo) / (self.hi - self.lo) * bins as f64).floor();
        let idx = if pos < 0.0 { 0 } else { (pos as usize).min(bins - 1) };
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins).map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64).collect()
    }
}

/// Default histogram resolution for [`corpus_stats`].
pub const DEFAULT_HISTOGRAM_BINS: usize = 70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub label_counts: BTreeMap<u32, usize>,
    pub dataset_type_counts: BTreeMap<DatasetType, usize>,
    pub speaker_counts: BTreeMap<u32, usize>,
    pub adv_samples: usize,
    pub adv_histograms: PerAxis<Histogram>,
}

pub fn corpus_stats(records: &[SampleRecord], bins: usize) -> CorpusStats {
    let mut stats = CorpusStats {
        total: records.len(),
        label_counts: BTreeMap::new(),
        dataset_type_counts: BTreeMap::new(),
        speaker_counts: BTreeMap::new(),
        adv_samples: 0,
        adv_histograms: PerAxis::from_fn(|_| Histogram::new(ADV_MIN, ADV_MAX, bins.max(1))),
    };
    for r in records {
        *stats.label_counts.entry(r.label_token).or_insert(0) += 1;
        *stats.dataset_type_counts.entry(r.dataset_type).or_insert(0) += 1;
        *stats.speaker_counts.entry(r.speaker_id).or_insert(0) += 1;
        if let Some(p) = r.adv {
            stats.adv_samples += 1;
            stats.adv_histograms.a.add(p.get(Axis::Arousal));
            stats.adv_histograms.d.add(p.get(Axis::Dominance));
            stats.adv_histograms.v.add(p.get(Axis::Valence));
        }
    }
    stats
}
