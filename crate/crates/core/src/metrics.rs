//! Silence-aware evaluation.
//!
//! Stems with a present reference are scored with SI-SDR and its improvement
//! over the unprocessed mixture (SDRi). Stems whose reference is silent are
//! scored by the RMS level of the estimate, in dBFS. Every stem also gets a
//! presence decision by thresholding that RMS level, which feeds detection
//! precision, recall and F1.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::manifest::LoadedEntry;

pub const DEFAULT_SI_SDR_CAP_DB: f64 = 60.0;
pub const DEFAULT_RMS_EPSILON: f64 = 1e-12;
pub const DEFAULT_DETECTION_THRESHOLD_DBFS: f64 = -60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// SI-SDR values are clamped to `[-cap, cap]` dB.
    pub si_sdr_cap: f64,
    pub epsilon: f64,
    pub detection_threshold_dbfs: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            si_sdr_cap: DEFAULT_SI_SDR_CAP_DB,
            epsilon: DEFAULT_RMS_EPSILON,
            detection_threshold_dbfs: DEFAULT_DETECTION_THRESHOLD_DBFS,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.si_sdr_cap > 0.0) {
            return Err(Error::Config(format!("si_sdr_cap must be positive, got {}", self.si_sdr_cap)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.detection_threshold_dbfs.is_finite() {
            return Err(Error::Config("detection_threshold_dbfs must be finite".into()));
        }
        Ok(())
    }
}

/// SI-SDR in dB without clamping: `+inf` for a perfect (rescaled) estimate,
/// `-inf` for a zero estimate or one orthogonal to the reference.
///
/// The reference is projected with `alpha = <est, ref> / <ref, ref>`.
pub fn si_sdr_uncapped(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    estimate.ensure_compatible(reference)?;
    if reference.is_empty() {
        return Err(Error::Contract("SI-SDR of empty signals".into()));
    }
    let (s, e) = (reference.samples(), estimate.samples());
    let ref_energy: f64 = s.iter().map(|v| v * v).sum();
    if ref_energy == 0.0 {
        return Err(Error::UndefinedMetric(
            "SI-SDR against a silent reference; score it with RMS-dBFS instead".into(),
        ));
    }
    if e.iter().all(|&v| v == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let alpha = e.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / ref_energy;
    let (mut target, mut residual) = (0.0, 0.0);
    for (&ei, &si) in e.iter().zip(s) {
        let proj = alpha * si;
        target += proj * proj;
        residual += (proj - ei) * (proj - ei);
    }
    Ok(if residual == 0.0 {
        f64::INFINITY
    } else if target == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (target / residual).log10()
    })
}

pub fn si_sdr_with_cap(estimate: &Waveform, reference: &Waveform, cap: f64) -> Result<f64> {
    Ok(si_sdr_uncapped(estimate, reference)?.clamp(-cap, cap))
}

/// SI-SDR clamped to the default ±60 dB.
pub fn si_sdr(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    si_sdr_with_cap(estimate, reference, DEFAULT_SI_SDR_CAP_DB)
}

pub fn sdri_with_cap(estimate: &Waveform, reference: &Waveform, mixture: &Waveform, cap: f64) -> Result<f64> {
    Ok(si_sdr_with_cap(estimate, reference, cap)? - si_sdr_with_cap(mixture, reference, cap)?)
}

/// SI-SDR improvement of `estimate` over the unprocessed `mixture`.
pub fn sdri(estimate: &Waveform, reference: &Waveform, mixture: &Waveform) -> Result<f64> {
    sdri_with_cap(estimate, reference, mixture, DEFAULT_SI_SDR_CAP_DB)
}

/// `20 log10 sqrt(mean(x^2) + epsilon)`.
pub fn rms_dbfs_with_epsilon(x: &Waveform, epsilon: f64) -> f64 {
    let mean_sq = if x.is_empty() {
        0.0
    } else {
        x.energy() / x.len() as f64
    };
    20.0 * (mean_sq + epsilon).sqrt().log10()
}

/// RMS level with `epsilon = 1e-12`, so silence reads -120 dBFS.
pub fn rms_dbfs(x: &Waveform) -> f64 {
    rms_dbfs_with_epsilon(x, DEFAULT_RMS_EPSILON)
}

/// A stem counts as present when its RMS level is strictly above the threshold.
pub fn detect_stem(estimate: &Waveform, threshold_dbfs: f64) -> bool {
    rms_dbfs(estimate) > threshold_dbfs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Active,
    Silent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StemScore {
    pub label: String,
    pub condition: Condition,
    pub si_sdr: Option<f64>,
    pub sdri: Option<f64>,
    pub rms_dbfs: f64,
    pub detected: bool,
    pub reference_present: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No positives and no detections: F1 is 0 by convention, not by failure.
    pub degenerate: bool,
}

impl DetectionStats {
    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            precision,
            recall,
            f1,
            degenerate: tp + fp + fn_ == 0,
        }
    }
}

/// Key used by [`detection_f1`] when scores are pooled across labels.
pub const POOLED_LABEL: &str = "all";

/// Precision, recall and F1 of `detected` against `reference_present`, either
/// per label or pooled under [`POOLED_LABEL`].
pub fn detection_f1(scores: &[StemScore], per_label: bool) -> BTreeMap<String, DetectionStats> {
    let mut counts: BTreeMap<String, [usize; 4]> = BTreeMap::new();
    for s in scores {
        let key = if per_label { s.label.clone() } else { POOLED_LABEL.to_string() };
        let c = counts.entry(key).or_default();
        let slot = match (s.detected, s.reference_present) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        c[slot] += 1;
    }
    counts
        .into_iter()
        .map(|(k, [tp, fp, fn_, tn])| (k, DetectionStats::from_counts(tp, fp, fn_, tn)))
        .collect()
}

/// Scores one separated entry against its references.
///
/// `estimates` must hold one signal per label of the entry, each as long as the
/// mixture.
pub fn evaluate_entry(
    estimates: &BTreeMap<String, Waveform>,
    entry: &LoadedEntry,
    cfg: &EvalConfig,
) -> Result<Vec<StemScore>> {
    let mixture = entry.data.mixture();
    let mut scores = Vec::with_capacity(entry.data.targets().len());
    for (label, reference) in entry.data.targets() {
        let estimate = estimates.get(label).ok_or_else(|| {
            Error::Contract(format!("entry {}: no estimate for label {label:?}", entry.id))
        })?;
        mixture
            .ensure_compatible(estimate)
            .map_err(|e| Error::Contract(format!("entry {}, estimate {label:?}: {e}", entry.id)))?;

        let level = rms_dbfs_with_epsilon(estimate, cfg.epsilon);
        let detected = level > cfg.detection_threshold_dbfs;
        let present = entry.is_present(label) && reference.energy() > 0.0;
        let (si, improvement) = if present {
            let si = si_sdr_with_cap(estimate, reference, cfg.si_sdr_cap)?;
            let base = si_sdr_with_cap(mixture, reference, cfg.si_sdr_cap)?;
            (Some(si), Some(si - base))
        } else {
            (None, None)
        };
        scores.push(StemScore {
            label: label.clone(),
            condition: if present { Condition::Active } else { Condition::Silent },
            si_sdr: si,
            sdri: improvement,
            rms_dbfs: level,
            detected,
            reference_present: present,
        });
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryScores {
    pub entry_id: String,
    pub active_set: Vec<String>,
    pub scores: Vec<StemScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StemAggregate {
    pub label: String,
    pub n_active: usize,
    pub mean_si_sdr_db: Option<f64>,
    pub mean_sdri_db: Option<f64>,
    pub n_silent: usize,
    pub mean_rms_dbfs: Option<f64>,
    pub detection: DetectionStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n_entries: usize,
    pub per_stem: Vec<StemAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Everything needed to reproduce the run.
    pub config: serde_json::Value,
    /// Entries whose active set is the full label set.
    pub all_stems: ConditionReport,
    /// Every other entry.
    pub subset: ConditionReport,
    pub overall: ConditionReport,
    pub per_entry: Vec<EntryScores>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Per-label means over the entries where each metric is defined.
pub fn aggregate_condition<'a>(entries: impl IntoIterator<Item = &'a EntryScores>, labels: &[String]) -> ConditionReport {
    let mut n_entries = 0;
    let mut by_label: BTreeMap<&str, Vec<&StemScore>> = BTreeMap::new();
    for e in entries {
        n_entries += 1;
        for s in &e.scores {
            by_label.entry(s.label.as_str()).or_default().push(s);
        }
    }
    let per_stem = labels
        .iter()
        .map(|label| {
            let scores = by_label.remove(label.as_str()).unwrap_or_default();
            let active: Vec<&StemScore> = scores.iter().copied().filter(|s| s.reference_present).collect();
            let silent: Vec<f64> = scores.iter().filter(|s| !s.reference_present).map(|s| s.rms_dbfs).collect();
            let owned: Vec<StemScore> = scores.iter().map(|s| (*s).clone()).collect();
            StemAggregate {
                label: label.clone(),
                n_active: active.len(),
                mean_si_sdr_db: mean(&active.iter().filter_map(|s| s.si_sdr).collect::<Vec<_>>()),
                mean_sdri_db: mean(&active.iter().filter_map(|s| s.sdri).collect::<Vec<_>>()),
                n_silent: silent.len(),
                mean_rms_dbfs: mean(&silent),
                detection: detection_f1(&owned, false).remove(POOLED_LABEL).unwrap_or_default(),
            }
        })
        .collect();
    ConditionReport { n_entries, per_stem }
}

/// Builds the report, splitting entries into the all-stems and subset conditions.
pub fn build_report(per_entry: Vec<EntryScores>, labels: &[String], config: serde_json::Value) -> EvalReport {
    let is_full = |e: &EntryScores| labels.iter().all(|l| e.active_set.contains(l));
    EvalReport {
        config,
        all_stems: aggregate_condition(per_entry.iter().filter(|e| is_full(e)), labels),
        subset: aggregate_condition(per_entry.iter().filter(|e| !is_full(e)), labels),
        overall: aggregate_condition(per_entry.iter(), labels),
        per_entry,
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "label",
    "n_active",
    "mean_sdri_db",
    "n_silent",
    "mean_rms_dbfs",
    "precision",
    "recall",
    "f1",
];

/// One row per stem; undefined means are left empty.
pub fn write_stem_csv(path: impl AsRef<Path>, report: &ConditionReport) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for s in &report.per_stem {
        w.write_record([
            s.label.clone(),
            s.n_active.to_string(),
            opt(s.mean_sdri_db),
            s.n_silent.to_string(),
            opt(s.mean_rms_dbfs),
            format!("{:.6}", s.detection.precision),
            format!("{:.6}", s.detection.recall),
            format!("{:.6}", s.detection.f1),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
