//! Silence-aware reconstruction losses.
//!
//! The composite objective is a weighted sum of a waveform L1 term, a
//! multi-scale log-mel L1 term and a multi-resolution STFT term (L1 on
//! magnitudes plus L1 on log magnitudes). Log features are floored, so every
//! term stays finite when either signal is all zeros. All reductions are means.

use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::spectral::{
    log_compress, magnitude, mel_filterbank, mel_spectrogram, stft, SpectralConfig, Spectrogram,
    DEFAULT_LOG_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub stft_windows: Vec<usize>,
    /// `(n_mels, window)` pairs.
    pub mel_scales: Vec<(usize, usize)>,
    pub weight_l1: f64,
    pub weight_mel: f64,
    pub weight_stft: f64,
    pub log_floor: f64,
    /// Hop is `window / hop_divisor` for every loss resolution.
    pub hop_divisor: usize,
    pub mel_fmin: f64,
    pub mel_fmax: Option<f64>,
    /// Exponent applied to STFT magnitudes before the mel projection (1 = magnitude, 2 = power).
    pub mel_power: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            stft_windows: vec![512, 1024, 2048],
            mel_scales: vec![
                (5, 32),
                (10, 64),
                (20, 128),
                (40, 256),
                (80, 512),
                (160, 1024),
                (320, 2048),
            ],
            weight_l1: 1.0,
            weight_mel: 0.7,
            weight_stft: 0.3,
            log_floor: DEFAULT_LOG_FLOOR,
            hop_divisor: 4,
            mel_fmin: 0.0,
            mel_fmax: None,
            mel_power: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.weight_l1, self.weight_mel, self.weight_stft];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0, got {weights:?}")));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        if self.stft_windows.is_empty() || self.mel_scales.is_empty() {
            return Err(Error::Config("stft_windows and mel_scales must be non-empty".into()));
        }
        let windows = self.stft_windows.iter().chain(self.mel_scales.iter().map(|(_, w)| w));
        for &w in windows {
            if w < 32 || !w.is_power_of_two() {
                return Err(Error::Config(format!("loss window {w} must be a power of two >= 32")));
            }
        }
        if self.mel_scales.iter().any(|&(n, _)| n == 0) {
            return Err(Error::Config("n_mels must be positive".into()));
        }
        if self.hop_divisor < 2 || self.stft_windows.iter().chain(self.mel_scales.iter().map(|(_, w)| w)).any(|w| w % self.hop_divisor != 0) {
            return Err(Error::Config(format!(
                "hop_divisor {} must be >= 2 and divide every window",
                self.hop_divisor
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config(format!("log_floor must be positive, got {}", self.log_floor)));
        }
        if !(self.mel_power > 0.0) {
            return Err(Error::Config(format!("mel_power must be positive, got {}", self.mel_power)));
        }
        Ok(())
    }

    pub fn stft_config(&self, window: usize) -> SpectralConfig {
        SpectralConfig {
            log_floor: self.log_floor,
            ..SpectralConfig::linear(window, window / self.hop_divisor)
        }
    }

    pub fn mel_config(&self, n_mels: usize, window: usize) -> SpectralConfig {
        SpectralConfig {
            mel_fmin: self.mel_fmin,
            mel_fmax: self.mel_fmax,
            log_floor: self.log_floor,
            ..SpectralConfig::mel(n_mels, window, window / self.hop_divisor)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub mel: f64,
    pub stft: f64,
    pub composite: f64,
}

fn mean_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (sum, n) = a
        .into_iter()
        .zip(b)
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + (x - y).abs(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn check_pair(estimate: &Waveform, target: &Waveform) -> Result<()> {
    estimate.ensure_compatible(target)?;
    if estimate.is_empty() {
        return Err(Error::Contract("spectral losses need at least one sample".into()));
    }
    Ok(())
}

/// Mean absolute sample difference.
pub fn l1_waveform(estimate: &Waveform, target: &Waveform) -> Result<f64> {
    estimate.ensure_compatible(target)?;
    Ok(mean_abs_diff(estimate.samples(), target.samples()))
}

fn log_mel(w: &Waveform, cfg: &SpectralConfig, fb: &ndarray::Array2<f64>, power: f64) -> Result<Spectrogram> {
    let mut mag = magnitude(&stft(w, cfg)?);
    if power != 1.0 {
        mag.values.mapv_inplace(|v| v.powf(power));
    }
    log_compress(&mel_spectrogram(&mag, fb)?, cfg.log_floor)
}

/// Mean over scales of the mean absolute difference between log-mel spectrograms.
pub fn mel_loss(estimate: &Waveform, target: &Waveform, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(estimate, target)?;
    let mut total = 0.0;
    for &(n_mels, window) in &cfg.mel_scales {
        let spec = cfg.mel_config(n_mels, window);
        let fb = mel_filterbank(&spec, target.sample_rate())?;
        let e = log_mel(estimate, &spec, &fb, cfg.mel_power)?;
        let t = log_mel(target, &spec, &fb, cfg.mel_power)?;
        total += mean_abs_diff(e.values.iter(), t.values.iter());
    }
    Ok(total / cfg.mel_scales.len() as f64)
}

/// Mean over resolutions of `L1(|E|, |T|) + L1(log|E|, log|T|)`.
pub fn stft_loss(estimate: &Waveform, target: &Waveform, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(estimate, target)?;
    let mut total = 0.0;
    for &window in &cfg.stft_windows {
        let spec = cfg.stft_config(window);
        let e = magnitude(&stft(estimate, &spec)?);
        let t = magnitude(&stft(target, &spec)?);
        let lin = mean_abs_diff(e.values.iter(), t.values.iter());
        let (le, lt) = (log_compress(&e, cfg.log_floor)?, log_compress(&t, cfg.log_floor)?);
        let log = mean_abs_diff(le.values.iter(), lt.values.iter());
        total += lin + log;
    }
    Ok(total / cfg.stft_windows.len() as f64)
}

pub fn composite_loss(estimate: &Waveform, target: &Waveform, cfg: &LossConfig) -> Result<LossBreakdown> {
    let l1 = l1_waveform(estimate, target)?;
    let mel = mel_loss(estimate, target, cfg)?;
    let stft = stft_loss(estimate, target, cfg)?;
    Ok(combine(l1, mel, stft, cfg))
}

/// Weighted sum of precomputed components.
pub fn combine(l1: f64, mel: f64, stft: f64, cfg: &LossConfig) -> LossBreakdown {
    LossBreakdown {
        l1,
        mel,
        stft,
        composite: cfg.weight_l1 * l1 + cfg.weight_mel * mel + cfg.weight_stft * stft,
    }
}

/// Snake activation `x + sin^2(a x) / a`.
///
/// Panics if `a` is not positive.
pub fn snake(x: f64, a: f64) -> f64 {
    assert!(a > 0.0, "snake frequency must be positive, got {a}");
    let s = (a * x).sin();
    x + s * s / a
}

/// Derivative of [`snake`] with respect to `x`: `1 + sin(2 a x)`.
pub fn snake_grad(x: f64, a: f64) -> f64 {
    assert!(a > 0.0, "snake frequency must be positive, got {a}");
    1.0 + (2.0 * a * x).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn w(samples: Vec<f64>) -> Waveform {
        Waveform::new(samples, 16000).unwrap()
    }

    fn sine(freq: f64, len: usize) -> Waveform {
        w((0..len).map(|i| (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect())
    }

    fn small_cfg() -> LossConfig {
        LossConfig {
            stft_windows: vec![64, 128],
            mel_scales: vec![(5, 32), (10, 64)],
            ..Default::default()
        }
    }

    #[test]
    fn defaults_follow_the_published_setup() {
        let cfg = LossConfig::default();
        assert_eq!(cfg.stft_windows, [512, 1024, 2048]);
        assert_eq!(cfg.mel_scales.iter().map(|s| s.0).collect::<Vec<_>>(), [5, 10, 20, 40, 80, 160, 320]);
        assert_eq!(cfg.mel_scales.iter().map(|s| s.1).collect::<Vec<_>>(), [32, 64, 128, 256, 512, 1024, 2048]);
        assert_eq!((cfg.weight_l1, cfg.weight_mel, cfg.weight_stft), (1.0, 0.7, 0.3));
        cfg.validate().unwrap();
    }

    #[test]
    fn l1_examples() {
        let x = sine(440.0, 100);
        assert_eq!(l1_waveform(&x, &x).unwrap(), 0.0);
        assert_eq!(l1_waveform(&w(vec![0.0, 0.0]), &w(vec![1.0, -1.0])).unwrap(), 1.0);
        let z = Waveform::zeros(50, 16000);
        assert_eq!(l1_waveform(&z, &z).unwrap(), 0.0);
        assert!(l1_waveform(&z, &x).is_err());
    }

    #[test]
    fn identical_and_silent_pairs_are_zero() {
        let cfg = small_cfg();
        let x = sine(440.0, 1000);
        let z = Waveform::zeros(1000, 16000);
        for (a, b) in [(&x, &x), (&z, &z)] {
            assert_eq!(composite_loss(a, b, &cfg).unwrap(), LossBreakdown { l1: 0.0, mel: 0.0, stft: 0.0, composite: 0.0 });
        }
    }

    #[test]
    fn silent_target_gives_finite_positive_loss() {
        let cfg = small_cfg();
        let b = composite_loss(&sine(440.0, 1000), &Waveform::zeros(1000, 16000), &cfg).unwrap();
        for v in [b.l1, b.mel, b.stft, b.composite] {
            assert!(v.is_finite() && v > 0.0);
        }
    }

    #[test]
    fn weighted_sum() {
        let b = combine(0.2, 0.1, 0.3, &LossConfig::default());
        assert!((b.composite - 0.36).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cfg = small_cfg();
        assert!(mel_loss(&sine(1.0, 10), &sine(1.0, 11), &cfg).is_err());
        assert!(stft_loss(&sine(1.0, 10), &sine(1.0, 11), &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            LossConfig { weight_l1: 0.0, weight_mel: 0.0, weight_stft: 0.0, ..Default::default() },
            LossConfig { weight_mel: -1.0, ..Default::default() },
            LossConfig { stft_windows: vec![], ..Default::default() },
            LossConfig { stft_windows: vec![100], ..Default::default() },
            LossConfig { mel_scales: vec![(5, 16)], ..Default::default() },
            LossConfig { log_floor: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn snake_values() {
        for a in [0.1, 1.0, 7.5] {
            assert_eq!(snake(0.0, a), 0.0);
        }
        assert!((snake(PI / 2.0, 1.0) - (PI / 2.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn snake_approaches_identity_for_small_a() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 2.0] {
            for &a in &[1e-1, 1e-3, 1e-6] {
                assert!((snake(x, a) - x).abs() <= a * x * x + 1e-15);
            }
        }
    }
}
