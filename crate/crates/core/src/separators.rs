//! Reference separators with known answers, used to exercise the
//! augment → separate → evaluate pipeline without a trained model.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::spectral::{istft, stft, SpectralConfig};

/// Denominator floor for the ideal ratio mask.
pub const MASK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorKind {
    /// Return the references verbatim.
    OracleTargets,
    /// Return the mixture for every label.
    Passthrough,
    /// Return silence for every label.
    Zeros,
    /// Mask the mixture STFT with reference magnitude ratios.
    IdealRatioMask,
}

impl SeparatorKind {
    pub fn needs_references(self) -> bool {
        matches!(self, SeparatorKind::OracleTargets | SeparatorKind::IdealRatioMask)
    }

    pub fn name(self) -> &'static str {
        match self {
            SeparatorKind::OracleTargets => "oracle_targets",
            SeparatorKind::Passthrough => "passthrough",
            SeparatorKind::Zeros => "zeros",
            SeparatorKind::IdealRatioMask => "ideal_ratio_mask",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorSpec {
    pub kind: SeparatorKind,
    /// Analysis used by the ideal ratio mask.
    #[serde(default = "default_irm_spectral")]
    pub spectral: SpectralConfig,
    /// `p` in `|S_i|^p / sum_j |S_j|^p`.
    #[serde(default = "default_mask_exponent")]
    pub mask_exponent: f64,
}

fn default_irm_spectral() -> SpectralConfig {
    SpectralConfig::linear(1024, 256)
}

fn default_mask_exponent() -> f64 {
    1.0
}

impl SeparatorSpec {
    pub fn new(kind: SeparatorKind) -> Self {
        Self {
            kind,
            spectral: default_irm_spectral(),
            mask_exponent: default_mask_exponent(),
        }
    }

    pub fn ideal_ratio_mask(spectral: SpectralConfig, mask_exponent: f64) -> Self {
        Self {
            kind: SeparatorKind::IdealRatioMask,
            spectral,
            mask_exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == SeparatorKind::IdealRatioMask {
            self.spectral.validate_invertible()?;
            if !(self.mask_exponent > 0.0 && self.mask_exponent.is_finite()) {
                return Err(Error::Config(format!(
                    "mask_exponent must be positive, got {}",
                    self.mask_exponent
                )));
            }
        }
        Ok(())
    }
}

/// Runs `spec` on `mixture`, returning one estimate per label, each as long as the mixture.
///
/// Labels without a reference (or with a silent one) are treated as inactive.
pub fn separate(
    spec: &SeparatorSpec,
    mixture: &Waveform,
    references: Option<&BTreeMap<String, Waveform>>,
    labels: &[String],
) -> Result<BTreeMap<String, Waveform>> {
    spec.validate()?;
    let silence = || Waveform::zeros(mixture.len(), mixture.sample_rate());
    let refs = match (spec.kind.needs_references(), references) {
        (true, None) => {
            return Err(Error::Contract(format!(
                "{} separator needs reference stems",
                spec.kind.name()
            )))
        }
        (_, refs) => refs,
    };
    if let Some(refs) = refs {
        for (label, r) in refs {
            mixture
                .ensure_compatible(r)
                .map_err(|e| Error::Contract(format!("reference {label:?}: {e}")))?;
        }
    }

    let out = match spec.kind {
        SeparatorKind::Passthrough => labels.iter().map(|l| (l.clone(), mixture.clone())).collect(),
        SeparatorKind::Zeros => labels.iter().map(|l| (l.clone(), silence())).collect(),
        SeparatorKind::OracleTargets => {
            let refs = refs.expect("checked above");
            labels
                .iter()
                .map(|l| (l.clone(), refs.get(l).cloned().unwrap_or_else(silence)))
                .collect()
        }
        SeparatorKind::IdealRatioMask => {
            let refs = refs.expect("checked above");
            let mut out: BTreeMap<String, Waveform> =
                labels.iter().map(|l| (l.clone(), silence())).collect();
            if mixture.is_empty() {
                return Ok(out);
            }
            let active: Vec<(String, &Waveform)> = labels
                .iter()
                .filter_map(|l| refs.get(l).filter(|r| !r.is_silent()).map(|r| (l.clone(), r)))
                .collect();
            let masks = ideal_ratio_masks(&active, &spec.spectral, spec.mask_exponent)?;
            let mix_spec = stft(mixture, &spec.spectral)?;
            for (label, mask) in masks {
                let mut masked = mix_spec.clone();
                masked.values.zip_mut_with(&mask, |c, &m| *c *= m);
                out.insert(label, istft(&masked)?);
            }
            out
        }
    };
    Ok(out)
}

/// Per-reference masks `|S_i|^p / sum_j |S_j|^p` over `bins x frames`.
///
/// Where the denominator is at or below [`MASK_FLOOR`] every mask is `1 / n`.
pub fn ideal_ratio_masks(
    references: &[(String, &Waveform)],
    spectral: &SpectralConfig,
    exponent: f64,
) -> Result<Vec<(String, Array2<f64>)>> {
    if references.is_empty() {
        return Ok(Vec::new());
    }
    let powered: Vec<Array2<f64>> = references
        .iter()
        .map(|(_, r)| stft(r, spectral).map(|s| s.values.mapv(|c| c.norm().powf(exponent))))
        .collect::<Result<_>>()?;
    let mut denom = Array2::<f64>::zeros(powered[0].dim());
    for p in &powered {
        denom += p;
    }
    let uniform = 1.0 / references.len() as f64;
    Ok(references
        .iter()
        .zip(powered)
        .map(|((label, _), mut p)| {
            p.zip_mut_with(&denom, |m, &d| *m = if d > MASK_FLOOR { *m / d } else { uniform });
            (label.clone(), p)
        })
        .collect())
}
