//! Signal containers shared by every other module.
//!
//! All samples are carried as `f64` at nominal full scale `[-1, 1]`. Sample
//! rates are carried alongside the samples and never converted; combining
//! signals of different rates is an error.

mod segment;
mod wav;

pub use segment::{segment, TailPolicy};
pub use wav::{read_wav, write_wav, WavEncoding, WriteReport};

use crate::error::{Error, Result};

/// A mono signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Contract("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// All-zero signal of `len` samples.
    ///
    /// Panics if `sample_rate` is zero.
    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    /// True when every sample is exactly zero.
    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Copy of `len` samples starting at `start`, zero-filled past the end of the signal.
    pub fn window(&self, start: usize, len: usize) -> Self {
        let mut samples = vec![0.0; len];
        if start < self.samples.len() {
            let end = (start + len).min(self.samples.len());
            samples[..end - start].copy_from_slice(&self.samples[start..end]);
        }
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    /// Errors unless `other` has the same rate and length.
    pub fn ensure_compatible(&self, other: &Waveform) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::Contract(format!(
                "sample rate mismatch: {} Hz vs {} Hz",
                self.sample_rate, other.sample_rate
            )));
        }
        if self.len() != other.len() {
            return Err(Error::Contract(format!(
                "length mismatch: {} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// One clip of aligned stems, keyed by label.
#[derive(Debug, Clone)]
pub struct StemClip {
    clip_id: String,
    stems: Vec<(String, Waveform)>,
}

impl StemClip {
    /// Builds a clip, checking that labels are unique and that every stem shares
    /// one sample rate and one length.
    pub fn new(clip_id: impl Into<String>, stems: Vec<(String, Waveform)>) -> Result<Self> {
        let clip_id = clip_id.into();
        if stems.is_empty() {
            return Err(Error::Contract(format!("clip {clip_id} has no stems")));
        }
        for (i, (label, wave)) in stems.iter().enumerate() {
            if stems[..i].iter().any(|(other, _)| other == label) {
                return Err(Error::Contract(format!(
                    "clip {clip_id}: duplicate stem label {label:?}"
                )));
            }
            stems[0].1.ensure_compatible(wave).map_err(|e| {
                Error::Contract(format!("clip {clip_id}, stem {label:?}: {e}"))
            })?;
        }
        Ok(Self { clip_id, stems })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn stems(&self) -> &[(String, Waveform)] {
        &self.stems
    }

    pub fn stem(&self, label: &str) -> Option<&Waveform> {
        self.stems.iter().find(|(l, _)| l == label).map(|(_, w)| w)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.stems.iter().map(|(l, _)| l.as_str())
    }

    pub fn sample_rate(&self) -> u32 {
        self.stems[0].1.sample_rate()
    }

    pub fn len(&self) -> usize {
        self.stems[0].1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A mixture of a stem subset together with the per-label targets.
///
/// Targets cover every label of the source clip; labels outside the active set
/// hold all-zero signals.
#[derive(Debug, Clone)]
pub struct SubsetMixture {
    pub(crate) source_clip_id: String,
    pub(crate) segment_index: usize,
    pub(crate) active_set: Vec<String>,
    pub(crate) mixture: Waveform,
    pub(crate) targets: Vec<(String, Waveform)>,
}

impl SubsetMixture {
    pub fn source_clip_id(&self) -> &str {
        &self.source_clip_id
    }

    pub fn segment_index(&self) -> usize {
        self.segment_index
    }

    pub fn active_set(&self) -> &[String] {
        &self.active_set
    }

    pub fn is_active(&self, label: &str) -> bool {
        self.active_set.iter().any(|l| l == label)
    }

    pub fn mixture(&self) -> &Waveform {
        &self.mixture
    }

    pub fn targets(&self) -> &[(String, Waveform)] {
        &self.targets
    }

    pub fn target(&self, label: &str) -> Option<&Waveform> {
        self.targets.iter().find(|(l, _)| l == label).map(|(_, w)| w)
    }

    /// Cuts the mixture and every target into aligned fixed-length pieces.
    pub fn segments(&self, segment_length_s: f64, policy: TailPolicy) -> Result<Vec<SubsetMixture>> {
        let mixtures = segment(&self.mixture, segment_length_s, policy)?;
        let mut per_target = Vec::with_capacity(self.targets.len());
        for (label, wave) in &self.targets {
            per_target.push((label, segment(wave, segment_length_s, policy)?));
        }
        Ok(mixtures
            .into_iter()
            .enumerate()
            .map(|(k, mixture)| SubsetMixture {
                source_clip_id: self.source_clip_id.clone(),
                segment_index: k,
                active_set: self.active_set.clone(),
                mixture,
                targets: per_target
                    .iter()
                    .map(|(label, segs)| ((*label).clone(), segs[k].clone()))
                    .collect(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(samples: &[f64]) -> Waveform {
        Waveform::new(samples.to_vec(), 8000).unwrap()
    }

    #[test]
    fn zero_sample_rate_is_rejected() {
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn clip_rejects_mismatched_stems() {
        let short = StemClip::new("c", vec![("a".into(), w(&[1.0, 2.0])), ("b".into(), w(&[1.0]))]);
        assert!(matches!(short, Err(Error::Contract(_))));

        let rate = StemClip::new(
            "c",
            vec![
                ("a".into(), w(&[1.0])),
                ("b".into(), Waveform::new(vec![1.0], 16000).unwrap()),
            ],
        );
        assert!(rate.is_err());

        let dup = StemClip::new("c", vec![("a".into(), w(&[1.0])), ("a".into(), w(&[1.0]))]);
        assert!(dup.is_err());
    }

    #[test]
    fn window_zero_fills_past_end() {
        let x = w(&[1.0, 2.0, 3.0]);
        assert_eq!(x.window(1, 4).samples(), &[2.0, 3.0, 0.0, 0.0]);
        assert_eq!(x.window(5, 2).samples(), &[0.0, 0.0]);
    }
}
