//! The `augment`, `separate`, `evaluate`, `loss` and `report` commands.
//!
//! Estimates directories mirror the dataset layout: the estimate for label `l`
//! of entry `clip/tag/segment_k` lives at `<estimates>/clip/tag/segment_k/<l>.wav`,
//! with `<l>` the label's file stem. External separators plug in by writing
//! that layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav, StemClip, WavEncoding, Waveform};
use crate::augment::{augment_dataset, MANIFEST_FILE};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::loss::{composite_loss, LossBreakdown};
use crate::manifest::{label_file_stem, DatasetManifest};
use crate::metrics::{build_report, evaluate_entry, write_stem_csv, ConditionReport, EntryScores, EvalReport};
use crate::separators::{separate, SeparatorSpec};

pub const REPORT_JSON: &str = "report.json";
pub const ALL_STEMS_CSV: &str = "all_stems.csv";
pub const SUBSET_CSV: &str = "subset.csv";
pub const OVERALL_CSV: &str = "overall.csv";

fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    Ok(pool.install(f))
}

/// Finds the WAV for `label` in a clip directory: `<label>.wav`, then `<file stem>.wav`.
fn stem_file(clip_dir: &Path, label: &str) -> Option<PathBuf> {
    [format!("{label}.wav"), format!("{}.wav", label_file_stem(label))]
        .into_iter()
        .map(|name| clip_dir.join(name))
        .find(|p| p.is_file())
}

/// Loads every clip under `input_dir` (one subdirectory per clip, sorted by name).
pub fn load_clips(input_dir: &Path, labels: &[String], sample_rate: Option<u32>) -> Result<Vec<StemClip>> {
    let listing = fs::read_dir(input_dir).map_err(|e| Error::io(input_dir, e))?;
    let mut dirs = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|e| Error::io(input_dir, e))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Data(format!("no clips found in {}", input_dir.display())));
    }

    let mut clips = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let clip_id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut stems = Vec::with_capacity(labels.len());
        for label in labels {
            let path = stem_file(&dir, label).ok_or_else(|| {
                Error::Data(format!("clip {clip_id}: missing stem file for label {label:?}"))
            })?;
            let wave = read_wav(&path)?;
            if let Some(sr) = sample_rate {
                if wave.sample_rate() != sr {
                    return Err(Error::Config(format!(
                        "{} has sample rate {} Hz, config expects {sr} Hz",
                        path.display(),
                        wave.sample_rate()
                    )));
                }
            }
            stems.push((label.clone(), wave));
        }
        clips.push(StemClip::new(clip_id, stems).map_err(|e| Error::Data(e.to_string()))?);
    }
    Ok(clips)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub manifest: PathBuf,
    pub clips: usize,
    pub subsets_per_clip: usize,
    pub entries: usize,
    pub total_duration_s: f64,
}

pub fn cmd_augment(cfg: &RunConfig) -> Result<AugmentSummary> {
    cfg.validate()?;
    let clips = load_clips(&cfg.input_dir(), &cfg.labels, cfg.sample_rate)?;
    let work_dir = cfg.work_dir();
    let manifest = run_in_pool(cfg.workers, || augment_dataset(&clips, &cfg.augment, &work_dir))??;
    Ok(AugmentSummary {
        manifest: work_dir.join(MANIFEST_FILE),
        clips: clips.len(),
        subsets_per_clip: cfg.augment.subsets().len(),
        entries: manifest.entries.len(),
        total_duration_s: manifest.entries.iter().map(|e| e.duration_s).sum(),
    })
}

fn read_manifest(cfg: &RunConfig) -> Result<(PathBuf, DatasetManifest)> {
    let root = cfg.work_dir();
    let manifest = DatasetManifest::read(root.join(MANIFEST_FILE))?;
    if manifest.labels() != cfg.labels.as_slice() {
        return Err(Error::Config(format!(
            "manifest labels {:?} differ from config labels {:?}",
            manifest.labels(),
            cfg.labels
        )));
    }
    Ok((root, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateSummary {
    pub estimates_dir: PathBuf,
    pub entries: usize,
    pub separator: SeparatorSpec,
}

pub fn default_estimates_dir(cfg: &RunConfig, spec: &SeparatorSpec) -> PathBuf {
    cfg.output_dir().join("estimates").join(spec.kind.name())
}

/// Runs a reference separator over every manifest entry.
pub fn cmd_separate(cfg: &RunConfig, spec: &SeparatorSpec, estimates_dir: Option<&Path>) -> Result<SeparateSummary> {
    cfg.validate()?;
    spec.validate()?;
    let (root, manifest) = read_manifest(cfg)?;
    let out_dir = estimates_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_estimates_dir(cfg, spec));

    run_in_pool(cfg.workers, || {
        manifest.entries.par_iter().try_for_each(|entry| -> Result<()> {
            let loaded = manifest.load_entry(&root, entry)?;
            let refs: BTreeMap<String, Waveform> = loaded
                .data
                .targets()
                .iter()
                .filter(|(l, _)| loaded.data.is_active(l))
                .cloned()
                .collect();
            let estimates = separate(spec, loaded.data.mixture(), Some(&refs), &cfg.labels)?;
            let dir = out_dir.join(&loaded.id);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (label, wave) in &estimates {
                write_wav(dir.join(format!("{}.wav", label_file_stem(label))), wave, WavEncoding::Float32)?;
            }
            Ok(())
        })
    })??;

    Ok(SeparateSummary {
        estimates_dir: out_dir,
        entries: manifest.entries.len(),
        separator: spec.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSummary {
    pub report_json: PathBuf,
    pub csv: Vec<PathBuf>,
    pub entries: usize,
}

/// Scores an estimates directory against the manifest and writes the report files.
pub fn cmd_evaluate(cfg: &RunConfig, estimates_dir: &Path, report_dir: Option<&Path>) -> Result<(EvaluateSummary, EvalReport)> {
    cfg.validate()?;
    let (root, manifest) = read_manifest(cfg)?;

    let missing: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| {
            cfg.labels.iter().any(|l| {
                !estimates_dir
                    .join(e.id())
                    .join(format!("{}.wav", label_file_stem(l)))
                    .is_file()
            })
        })
        .map(|e| e.id())
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(20).map(String::as_str).collect();
        return Err(Error::Data(format!(
            "{} manifest entries have missing estimates in {}: {}{}",
            missing.len(),
            estimates_dir.display(),
            shown.join(", "),
            if missing.len() > shown.len() { ", ..." } else { "" }
        )));
    }

    let per_entry: Vec<EntryScores> = run_in_pool(cfg.workers, || {
        manifest
            .entries
            .par_iter()
            .map(|entry| -> Result<EntryScores> {
                let loaded = manifest.load_entry(&root, entry)?;
                let mut estimates = BTreeMap::new();
                for label in &cfg.labels {
                    let path = estimates_dir.join(&loaded.id).join(format!("{}.wav", label_file_stem(label)));
                    estimates.insert(label.clone(), read_wav(&path)?);
                }
                Ok(EntryScores {
                    entry_id: loaded.id.clone(),
                    active_set: entry.active_set.clone(),
                    scores: evaluate_entry(&estimates, &loaded, &cfg.eval)?,
                })
            })
            .collect::<Result<_>>()
    })??;

    let echo = serde_json::to_value(cfg).map_err(|e| Error::Internal(e.to_string()))?;
    let report = build_report(per_entry, &cfg.labels, echo);

    let out_dir = report_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir().join("report"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let json_path = out_dir.join(REPORT_JSON);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    let mut csv = Vec::new();
    for (name, cond) in [(ALL_STEMS_CSV, &report.all_stems), (SUBSET_CSV, &report.subset), (OVERALL_CSV, &report.overall)] {
        let path = out_dir.join(name);
        write_stem_csv(&path, cond)?;
        csv.push(path);
    }
    Ok((
        EvaluateSummary {
            report_json: json_path,
            csv,
            entries: manifest.entries.len(),
        },
        report,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub l1: f64,
    pub mel: f64,
    pub stft: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossOutput {
    #[serde(flatten)]
    pub breakdown: LossBreakdown,
    pub weights: LossWeights,
}

pub fn cmd_loss(cfg: &RunConfig, estimate: &Path, target: &Path) -> Result<LossOutput> {
    cfg.validate()?;
    let (e, t) = (read_wav(estimate)?, read_wav(target)?);
    Ok(LossOutput {
        breakdown: composite_loss(&e, &t, &cfg.loss)?,
        weights: LossWeights {
            l1: cfg.loss.weight_l1,
            mel: cfg.loss.weight_mel,
            stft: cfg.loss.weight_stft,
        },
    })
}

/// Renders a saved report as plain-text tables.
pub fn cmd_report(report_json: &Path) -> Result<String> {
    let text = fs::read_to_string(report_json).map_err(|e| Error::io(report_json, e))?;
    let report: EvalReport = serde_json::from_str(&text).map_err(|e| Error::format(report_json, e))?;
    Ok(render_report(&report))
}

pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    for (title, cond) in [("all stems", &report.all_stems), ("subset", &report.subset)] {
        render_condition(&mut out, title, cond);
    }
    out
}

fn render_condition(out: &mut String, title: &str, cond: &ConditionReport) {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:8.2}")).unwrap_or_else(|| format!("{:>8}", "-"));
    let _ = writeln!(out, "== {title} ({} entries) ==", cond.n_entries);
    let _ = writeln!(
        out,
        "{:<20} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6} {:>6}",
        "stem", "n_act", "SDRi", "n_sil", "RMS", "P", "R", "F1"
    );
    for s in &cond.per_stem {
        let _ = writeln!(
            out,
            "{:<20} {:>8} {} {:>8} {} {:>6.3} {:>6.3} {:>6.3}",
            s.label,
            s.n_active,
            opt(s.mean_sdri_db),
            s.n_silent,
            opt(s.mean_rms_dbfs),
            s.detection.precision,
            s.detection.recall,
            s.detection.f1
        );
    }
    out.push('\n');
}
