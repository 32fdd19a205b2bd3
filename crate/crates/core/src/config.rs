//! TOML run configuration.
//!
//! Relative paths are kept as written and resolved against the directory of
//! the config file, so the echoed config is independent of where a run lives.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{default_labels, AugmentConfig};
use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::metrics::EvalConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// One subdirectory per clip, one WAV per label.
    pub input_dir: PathBuf,
    /// Augmented dataset and manifest.
    pub work_dir: PathBuf,
    /// Estimates and reports.
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            input_dir: "stems".into(),
            work_dir: "work".into(),
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub labels: Vec<String>,
    /// Expected sample rate of the input stems; taken from the data when unset.
    pub sample_rate: Option<u32>,
    pub seed: u64,
    /// Worker threads for per-entry work; 0 uses every core.
    pub workers: usize,
    pub augment: AugmentConfig,
    pub loss: LossConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            labels: default_labels(),
            sample_rate: None,
            seed: 0,
            workers: 0,
            augment: AugmentConfig::default(),
            loss: LossConfig::default(),
            eval: EvalConfig::default(),
            paths: PathsConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.augment.labels = cfg.labels.clone();
        cfg.base_dir = PathBuf::from(".");
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        cfg.base_dir = std::path::absolute(dir)
            .map_err(|e| Error::Config(format!("cannot resolve {}: {e}", dir.display())))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    /// Keeps `augment.labels` in step with the top-level label list.
    pub fn set_labels(&mut self, labels: Vec<String>) {
        self.augment.labels = labels.clone();
        self.labels = labels;
    }

    pub fn validate(&self) -> Result<()> {
        if self.augment.labels != self.labels {
            return Err(Error::Config("augment labels differ from the run labels".into()));
        }
        if self.sample_rate == Some(0) {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        self.augment.validate()?;
        self.loss.validate()?;
        self.eval.validate()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn input_dir(&self) -> PathBuf {
        self.resolve(&self.paths.input_dir)
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.paths.work_dir)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn custom_round_trip() {
        let text = r#"
            labels = ["a", "b"]
            sample_rate = 8000
            workers = 2
            [augment]
            segment_length_s = 2.0
            tail_policy = "pad_tail"
            [loss]
            stft_windows = [64]
            mel_scales = [[5, 32]]
            weight_stft = 0.5
            [eval]
            si_sdr_cap = 40.0
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.augment.labels, ["a", "b"]);
        assert_eq!(cfg.loss.mel_scales, [(5, 32)]);
        assert_eq!(cfg.eval.si_sdr_cap, 40.0);
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn invalid_nested_config_is_rejected() {
        assert!(RunConfig::from_toml_str("[augment]\nmin_subset_size = 9").is_err());
        assert!(RunConfig::from_toml_str("[loss]\nweight_l1 = -1.0").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[paths]\nwork_dir = \"w\"\noutput_dir = \"/abs/out\"").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.work_dir(), dir.path().join("w"));
        assert_eq!(cfg.output_dir(), PathBuf::from("/abs/out"));
        assert_eq!(cfg.paths.work_dir, PathBuf::from("w"));
    }
}
