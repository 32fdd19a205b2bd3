//! Line-delimited JSON dataset manifest.
//!
//! The first line is a header `{sample_rate, segment_length_s, labels}`; every
//! following line is one [`ManifestEntry`]. Paths are stored relative to the
//! directory that holds the manifest file.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, SubsetMixture, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub sample_rate: u32,
    pub segment_length_s: f64,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub mixture: PathBuf,
    /// Target files for the active stems only; inactive stems are implicitly silent.
    pub targets: BTreeMap<String, PathBuf>,
    pub active_set: Vec<String>,
    pub clip_id: String,
    pub segment_index: usize,
    pub duration_s: f64,
    /// Per-label ground-truth presence for this segment. An active stem whose
    /// segment level falls below the silence threshold is marked absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub presence: BTreeMap<String, bool>,
}

impl ManifestEntry {
    /// Stable identifier: the mixture's directory relative to the manifest root.
    pub fn id(&self) -> String {
        let parent = self.mixture.parent().unwrap_or(Path::new(""));
        parent
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }

    pub fn is_active(&self, label: &str) -> bool {
        self.active_set.iter().any(|l| l == label)
    }

    /// Ground-truth presence of `label`, defaulting to active-set membership.
    pub fn is_present(&self, label: &str) -> bool {
        self.presence
            .get(label)
            .copied()
            .unwrap_or_else(|| self.is_active(label))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

/// A manifest entry with its audio loaded.
#[derive(Debug, Clone)]
pub struct LoadedEntry {
    pub id: String,
    pub data: SubsetMixture,
    pub presence: BTreeMap<String, bool>,
}

impl LoadedEntry {
    pub fn is_present(&self, label: &str) -> bool {
        self.presence.get(label).copied().unwrap_or(false)
    }
}

impl DatasetManifest {
    pub fn labels(&self) -> &[String] {
        &self.header.labels
    }

    /// Checks that paths are unique and active sets are non-empty subsets of the labels.
    pub fn validate(&self) -> Result<()> {
        let labels: HashSet<&str> = self.header.labels.iter().map(String::as_str).collect();
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if entry.active_set.is_empty() {
                return Err(Error::Data(format!("entry {} has an empty active set", entry.id())));
            }
            for label in &entry.active_set {
                if !labels.contains(label.as_str()) {
                    return Err(Error::Data(format!(
                        "entry {} lists unknown label {label:?}",
                        entry.id()
                    )));
                }
            }
            for path in std::iter::once(&entry.mixture).chain(entry.targets.values()) {
                if !seen.insert(path) {
                    return Err(Error::Data(format!(
                        "path {} referenced more than once",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        serde_json::to_writer(&mut out, &self.header).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
        for entry in &self.entries {
            serde_json::to_writer(&mut out, entry).map_err(|e| Error::Internal(e.to_string()))?;
            out.push(b'\n');
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::format(path, "empty manifest"))?
            .map_err(|e| Error::io(path, e))?;
        let header: ManifestHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::format(path, format!("header: {e}")))?;
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line)
                .map_err(|e| Error::format(path, format!("line {}: {e}", i + 2)))?;
            entries.push(entry);
        }
        let manifest = Self { header, entries };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Loads mixture and targets of `entry`, resolving paths against `root`.
    /// Labels outside the active set get all-zero targets.
    pub fn load_entry(&self, root: &Path, entry: &ManifestEntry) -> Result<LoadedEntry> {
        let mixture = read_wav(root.join(&entry.mixture))?;
        let mut targets = Vec::with_capacity(self.header.labels.len());
        let mut presence = BTreeMap::new();
        for label in &self.header.labels {
            let wave = match entry.targets.get(label) {
                Some(p) => {
                    let w = read_wav(root.join(p))?;
                    mixture.ensure_compatible(&w).map_err(|e| {
                        Error::Data(format!("entry {}, target {label:?}: {e}", entry.id()))
                    })?;
                    w
                }
                None if entry.is_active(label) => {
                    return Err(Error::Data(format!(
                        "entry {} has no target file for active label {label:?}",
                        entry.id()
                    )))
                }
                None => Waveform::zeros(mixture.len(), mixture.sample_rate()),
            };
            targets.push((label.clone(), wave));
            presence.insert(label.clone(), entry.is_present(label));
        }
        Ok(LoadedEntry {
            id: entry.id(),
            data: SubsetMixture {
                source_clip_id: entry.clip_id.clone(),
                segment_index: entry.segment_index,
                active_set: entry.active_set.clone(),
                mixture,
                targets,
            },
            presence,
        })
    }
}

/// File-name stem for a label: lowercase ASCII alphanumerics, everything else `_`.
pub fn label_file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Short tags for each label: word initials ("Lead Vocal" -> "LV"), falling
/// back to file stems for all labels if initials collide.
pub fn label_abbreviations(labels: &[String]) -> Vec<String> {
    let initials: Vec<String> = labels
        .iter()
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == '_' || c == '-')
                .filter_map(|w| w.chars().next())
                .filter(|c| c.is_ascii_alphanumeric())
                .map(|c| c.to_ascii_uppercase())
                .collect()
        })
        .collect();
    let unique: HashSet<&String> = initials.iter().collect();
    if unique.len() == labels.len() && initials.iter().all(|s| !s.is_empty()) {
        initials
    } else {
        labels.iter().map(|l| label_file_stem(l)).collect()
    }
}

/// Directory tag for an active set: abbreviations in label order joined by `-`.
pub fn subset_tag(active_set: &[String], labels: &[String]) -> String {
    let abbrevs = label_abbreviations(labels);
    labels
        .iter()
        .zip(&abbrevs)
        .filter(|(l, _)| active_set.contains(l))
        .map(|(_, a)| a.as_str())
        .collect::<Vec<_>>()
        .join("-")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        ["Alto", "Bass", "Lead Vocal", "Soprano", "Tenor", "Vocal Percussion"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn abbreviations_for_default_labels() {
        assert_eq!(label_abbreviations(&labels()), ["A", "B", "LV", "S", "T", "VP"]);
        let active = vec!["Vocal Percussion".to_string(), "Alto".to_string()];
        assert_eq!(subset_tag(&active, &labels()), "A-VP");
    }

    #[test]
    fn colliding_initials_fall_back_to_stems() {
        let l = vec!["Alto 1".to_string(), "Apple".to_string(), "Alto".into()];
        assert_eq!(label_abbreviations(&l), ["alto_1", "apple", "alto"]);
    }

    #[test]
    fn round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let entry = ManifestEntry {
            mixture: "c/A/segment_0/mixture.wav".into(),
            targets: BTreeMap::from([("Alto".to_string(), "c/A/segment_0/alto.wav".into())]),
            active_set: vec!["Alto".into()],
            clip_id: "c".into(),
            segment_index: 0,
            duration_s: 4.0,
            presence: BTreeMap::new(),
        };
        let m = DatasetManifest {
            header: ManifestHeader {
                sample_rate: 16000,
                segment_length_s: 4.0,
                labels: labels(),
            },
            entries: vec![entry.clone()],
        };
        m.write(&path).unwrap();
        assert_eq!(DatasetManifest::read(&path).unwrap(), m);
        assert_eq!(entry.id(), "c/A/segment_0");
        assert!(entry.is_present("Alto"));
        assert!(!entry.is_present("Bass"));

        let mut dup = m.clone();
        dup.entries.push(entry);
        assert!(dup.validate().is_err());

        let mut unknown = m.clone();
        unknown.entries[0].active_set = vec!["Kazoo".into()];
        assert!(unknown.validate().is_err());

        let mut empty = m;
        empty.entries[0].active_set.clear();
        assert!(empty.validate().is_err());
    }
}
