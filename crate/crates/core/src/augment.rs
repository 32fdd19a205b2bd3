//! Power-set mixture augmentation.
//!
//! Every non-empty subset of a clip's stems is summed into its own mixture,
//! then the mixture and its aligned targets are cut into fixed-length segments.
//! A clip with `n` stems yields `2^n - 1` mixtures per segment.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, StemClip, SubsetMixture, TailPolicy, WavEncoding, Waveform};
use crate::error::{Error, Result};
use crate::manifest::{label_file_stem, subset_tag, DatasetManifest, ManifestEntry, ManifestHeader};
use crate::metrics::rms_dbfs;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// The six JaCappella stems, in their canonical order.
pub fn default_labels() -> Vec<String> {
    ["Alto", "Bass", "Lead Vocal", "Soprano", "Tenor", "Vocal Percussion"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Filled from the run-level label list when loaded from a run config.
    #[serde(skip)]
    pub labels: Vec<String>,
    pub segment_length_s: f64,
    pub tail_policy: TailPolicy,
    /// Emit only the full-ensemble mixture (no power set), for baseline comparisons.
    pub include_full_set_only: bool,
    pub min_subset_size: usize,
    /// An active stem whose segment RMS is at or below this level is labelled absent.
    pub silence_threshold_dbfs: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            labels: default_labels(),
            segment_length_s: 4.0,
            tail_policy: TailPolicy::DropTail,
            include_full_set_only: false,
            min_subset_size: 1,
            silence_threshold_dbfs: -60.0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::Config("label set is empty".into()));
        }
        let unique: HashSet<&String> = self.labels.iter().collect();
        if unique.len() != self.labels.len() {
            return Err(Error::Config("label set contains duplicates".into()));
        }
        if self.min_subset_size < 1 || self.min_subset_size > self.labels.len() {
            return Err(Error::Config(format!(
                "min_subset_size must lie in 1..={}, got {}",
                self.labels.len(),
                self.min_subset_size
            )));
        }
        if !(self.segment_length_s > 0.0) || !self.segment_length_s.is_finite() {
            return Err(Error::Config(format!(
                "segment_length_s must be positive, got {}",
                self.segment_length_s
            )));
        }
        if !self.silence_threshold_dbfs.is_finite() {
            return Err(Error::Config("silence_threshold_dbfs must be finite".into()));
        }
        Ok(())
    }

    /// The subsets this configuration emits per clip.
    pub fn subsets(&self) -> Vec<Vec<String>> {
        if self.include_full_set_only {
            vec![self.labels.clone()]
        } else {
            enumerate_subsets(&self.labels, self.min_subset_size)
        }
    }
}

/// Index subsets of `0..n` with at least `min_size` members, ordered by size and
/// then lexicographically.
pub fn enumerate_subset_indices(n: usize, min_size: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=(n - remaining) {
            current.push(i);
            extend(i + 1, n, k, current, out);
            current.pop();
        }
    }

    let mut out = Vec::new();
    for k in min_size.max(1)..=n {
        extend(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// All label subsets of size `>= min_size`, by size then by label position.
pub fn enumerate_subsets(labels: &[String], min_size: usize) -> Vec<Vec<String>> {
    enumerate_subset_indices(labels.len(), min_size)
        .into_iter()
        .map(|idx| idx.into_iter().map(|i| labels[i].clone()).collect())
        .collect()
}

/// Sums the stems named in `subset` in the clip's stem order.
///
/// Targets cover every stem of the clip: active stems verbatim, the rest zero.
/// No gain is applied to the mixture.
pub fn mix_subset(clip: &StemClip, subset: &[String]) -> Result<SubsetMixture> {
    if subset.is_empty() {
        return Err(Error::Config("subset must not be empty".into()));
    }
    for label in subset {
        if clip.stem(label).is_none() {
            return Err(Error::Config(format!(
                "clip {} has no stem labelled {label:?}",
                clip.clip_id()
            )));
        }
    }

    let mut mixture = vec![0.0; clip.len()];
    let mut active_set = Vec::with_capacity(subset.len());
    let mut targets = Vec::with_capacity(clip.stems().len());
    for (label, wave) in clip.stems() {
        if subset.contains(label) {
            for (m, &s) in mixture.iter_mut().zip(wave.samples()) {
                *m += s;
            }
            active_set.push(label.clone());
            targets.push((label.clone(), wave.clone()));
        } else {
            targets.push((label.clone(), Waveform::zeros(clip.len(), clip.sample_rate())));
        }
    }

    Ok(SubsetMixture {
        source_clip_id: clip.clip_id().to_string(),
        segment_index: 0,
        active_set,
        mixture: Waveform::new(mixture, clip.sample_rate())?,
        targets,
    })
}

/// Runs power-set augmentation over `clips`, writing audio under `out_dir` as
/// `clip_id/subset_tag/segment_k/{mixture.wav, <label>.wav}` plus
/// `out_dir/manifest.jsonl`.
///
/// Clips are processed in parallel; entry order in the manifest follows clip
/// order, then subset order, then segment index.
pub fn augment_dataset(clips: &[StemClip], cfg: &AugmentConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let first = clips
        .first()
        .ok_or_else(|| Error::Data("no clips found".into()))?;
    let sample_rate = first.sample_rate();

    let mut ids = HashSet::new();
    for clip in clips {
        if clip.sample_rate() != sample_rate {
            return Err(Error::Config(format!(
                "clip {} has sample rate {} Hz, expected {sample_rate} Hz",
                clip.clip_id(),
                clip.sample_rate()
            )));
        }
        if !ids.insert(clip.clip_id()) {
            return Err(Error::Config(format!("duplicate clip id {:?}", clip.clip_id())));
        }
        for label in &cfg.labels {
            if clip.stem(label).is_none() {
                return Err(Error::Config(format!(
                    "clip {} is missing stem {label:?}",
                    clip.clip_id()
                )));
            }
        }
    }

    let subsets = cfg.subsets();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let per_clip: Vec<Vec<ManifestEntry>> = clips
        .par_iter()
        .map(|clip| augment_clip(&ordered_clip(clip, &cfg.labels)?, &subsets, cfg, out_dir))
        .collect::<Result<_>>()?;

    let manifest = DatasetManifest {
        header: ManifestHeader {
            sample_rate,
            segment_length_s: cfg.segment_length_s,
            labels: cfg.labels.clone(),
        },
        entries: per_clip.into_iter().flatten().collect(),
    };
    manifest.validate()?;
    manifest.write(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Restricts a clip to the configured labels, in configured order.
fn ordered_clip(clip: &StemClip, labels: &[String]) -> Result<StemClip> {
    let stems = labels
        .iter()
        .map(|l| (l.clone(), clip.stem(l).cloned().expect("labels checked by caller")))
        .collect();
    StemClip::new(clip.clip_id(), stems)
}

fn augment_clip(
    clip: &StemClip,
    subsets: &[Vec<String>],
    cfg: &AugmentConfig,
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for subset in subsets {
        let mixed = mix_subset(clip, subset)?;
        let tag = subset_tag(subset, &cfg.labels);
        for seg in mixed.segments(cfg.segment_length_s, cfg.tail_policy)? {
            let rel_dir = PathBuf::from(clip.clip_id())
                .join(&tag)
                .join(format!("segment_{}", seg.segment_index()));
            let abs_dir = out_dir.join(&rel_dir);
            fs::create_dir_all(&abs_dir).map_err(|e| Error::io(&abs_dir, e))?;

            let mixture_rel = rel_dir.join("mixture.wav");
            write_wav(out_dir.join(&mixture_rel), seg.mixture(), WavEncoding::Float32)?;

            let mut targets = BTreeMap::new();
            let mut presence = BTreeMap::new();
            for (label, wave) in seg.targets() {
                let active = seg.is_active(label);
                if active {
                    let rel = rel_dir.join(format!("{}.wav", label_file_stem(label)));
                    write_wav(out_dir.join(&rel), wave, WavEncoding::Float32)?;
                    targets.insert(label.clone(), rel);
                }
                let present = active && rms_dbfs(wave) > cfg.silence_threshold_dbfs;
                presence.insert(label.clone(), present);
            }

            entries.push(ManifestEntry {
                mixture: mixture_rel,
                targets,
                active_set: seg.active_set().to_vec(),
                clip_id: clip.clip_id().to_string(),
                segment_index: seg.segment_index(),
                duration_s: seg.mixture().duration_s(),
                presence,
            });
        }
    }
    Ok(entries)
}
