//! STFT, inverse STFT, HTK mel filterbanks and log compression.
//!
//! Frames are centred: the signal is conceptually zero-padded by `fft_size / 2`
//! on both sides, frame `t` is centred on sample `t * hop`, and a signal of `L`
//! samples yields `ceil(L / hop)` frames. The window is a periodic Hann window,
//! centred inside the FFT frame when shorter than `fft_size`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{Error, Result};

pub const DEFAULT_LOG_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub window_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    #[serde(default)]
    pub window: WindowKind,
    #[serde(default)]
    pub n_mels: Option<usize>,
    #[serde(default)]
    pub mel_fmin: f64,
    /// Upper mel edge in Hz; `None` means Nyquist.
    #[serde(default)]
    pub mel_fmax: Option<f64>,
    #[serde(default = "default_log_floor")]
    pub log_floor: f64,
}

fn default_log_floor() -> f64 {
    DEFAULT_LOG_FLOOR
}

impl SpectralConfig {
    /// Linear-frequency analysis with `fft_size == window` and the given hop.
    pub fn linear(window_length: usize, hop_length: usize) -> Self {
        Self {
            window_length,
            hop_length,
            fft_size: window_length,
            window: WindowKind::Hann,
            n_mels: None,
            mel_fmin: 0.0,
            mel_fmax: None,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }

    pub fn mel(n_mels: usize, window_length: usize, hop_length: usize) -> Self {
        Self {
            n_mels: Some(n_mels),
            ..Self::linear(window_length, hop_length)
        }
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop_length == 0 || self.hop_length > self.window_length || self.window_length > self.fft_size {
            return Err(Error::Config(format!(
                "need 0 < hop ({}) <= window ({}) <= fft_size ({})",
                self.hop_length, self.window_length, self.fft_size
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config(format!("log_floor must be positive, got {}", self.log_floor)));
        }
        if self.n_mels == Some(0) {
            return Err(Error::Config("n_mels must be positive".into()));
        }
        Ok(())
    }

    /// Inversion needs the squared-window overlap to cover every sample.
    pub fn validate_invertible(&self) -> Result<()> {
        self.validate()?;
        if 2 * self.hop_length > self.window_length {
            return Err(Error::Config(format!(
                "hop {} exceeds half the window {}; overlap-add cannot invert it",
                self.hop_length, self.window_length
            )));
        }
        Ok(())
    }

    /// Analysis window zero-padded and centred to `fft_size`.
    pub fn padded_window(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.fft_size];
        let offset = (self.fft_size - self.window_length) / 2;
        let n = self.window_length as f64;
        for i in 0..self.window_length {
            out[offset + i] = match self.window {
                WindowKind::Hann => 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos(),
            };
        }
        out
    }

    pub fn n_frames(&self, signal_len: usize) -> usize {
        signal_len.div_ceil(self.hop_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrogramKind {
    Magnitude,
    LogMagnitude,
    Mel,
    LogMel,
}

/// Complex STFT, `bins x frames`.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub values: Array2<Complex64>,
    pub config: SpectralConfig,
    pub sample_rate: u32,
    /// Length of the analysed signal, used to trim the inverse.
    pub signal_len: usize,
}

/// Real-valued spectrogram, `bins x frames` (or `n_mels x frames`).
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub config: SpectralConfig,
    pub kind: SpectrogramKind,
}

pub fn stft(w: &Waveform, cfg: &SpectralConfig) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    if w.is_empty() {
        return Err(Error::Contract("STFT of an empty signal".into()));
    }
    let n = cfg.fft_size;
    let half = n / 2;
    let frames = cfg.n_frames(w.len());
    let window = cfg.padded_window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let x = w.samples();

    let mut values = Array2::<Complex64>::zeros((cfg.n_bins(), frames));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..frames {
        let start = (t * cfg.hop_length) as isize - half as isize;
        for (i, slot) in buf.iter_mut().enumerate() {
            let idx = start + i as isize;
            let v = if idx >= 0 && (idx as usize) < x.len() {
                x[idx as usize] * window[i]
            } else {
                0.0
            };
            *slot = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in buf[..cfg.n_bins()].iter().enumerate() {
            values[[k, t]] = *v;
        }
    }
    Ok(ComplexSpectrogram {
        values,
        config: cfg.clone(),
        sample_rate: w.sample_rate(),
        signal_len: w.len(),
    })
}

/// Least-squares overlap-add inverse of [`stft`], trimmed to the original length.
pub fn istft(s: &ComplexSpectrogram) -> Result<Waveform> {
    let cfg = &s.config;
    cfg.validate_invertible()?;
    let n = cfg.fft_size;
    let half = n / 2;
    let bins = cfg.n_bins();
    if s.values.nrows() != bins {
        return Err(Error::Contract(format!(
            "spectrogram has {} bins, config implies {bins}",
            s.values.nrows()
        )));
    }
    let window = cfg.padded_window();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);

    let len = s.signal_len;
    let mut out = vec![0.0; len];
    let mut norm = vec![0.0; len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..s.values.ncols() {
        for k in 0..n {
            buf[k] = if k < bins {
                s.values[[k, t]]
            } else {
                s.values[[n - k, t]].conj()
            };
        }
        ifft.process(&mut buf);
        let start = (t * cfg.hop_length) as isize - half as isize;
        for (i, v) in buf.iter().enumerate() {
            let idx = start + i as isize;
            if idx >= 0 && (idx as usize) < len {
                let idx = idx as usize;
                out[idx] += v.re / n as f64 * window[i];
                norm[idx] += window[i] * window[i];
            }
        }
    }
    for (o, &d) in out.iter_mut().zip(&norm) {
        *o = if d > 1e-10 { *o / d } else { 0.0 };
    }
    Waveform::new(out, s.sample_rate)
}

pub fn magnitude(s: &ComplexSpectrogram) -> Spectrogram {
    Spectrogram {
        values: s.values.mapv(|c| c.norm()),
        config: s.config.clone(),
        kind: SpectrogramKind::Magnitude,
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular HTK-scale filterbank, `n_mels x (fft_size / 2 + 1)`, peak weight 1.
pub fn mel_filterbank(cfg: &SpectralConfig, sample_rate: u32) -> Result<Array2<f64>> {
    cfg.validate()?;
    let n_mels = cfg
        .n_mels
        .ok_or_else(|| Error::Config("mel filterbank requested without n_mels".into()))?;
    let nyquist = sample_rate as f64 / 2.0;
    let fmax = cfg.mel_fmax.unwrap_or(nyquist);
    if !(cfg.mel_fmin >= 0.0 && cfg.mel_fmin < fmax && fmax <= nyquist) {
        return Err(Error::Config(format!(
            "need 0 <= mel_fmin ({}) < mel_fmax ({fmax}) <= {nyquist}",
            cfg.mel_fmin
        )));
    }

    let bins = cfg.n_bins();
    let bin_hz = sample_rate as f64 / cfg.fft_size as f64;
    let (mel_lo, mel_hi) = (hz_to_mel(cfg.mel_fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut fb = Array2::<f64>::zeros((n_mels, bins));
    for m in 0..n_mels {
        let (lo, centre, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let weight = if f > lo && f <= centre {
                (f - lo) / (centre - lo)
            } else if f > centre && f < hi {
                (hi - f) / (hi - centre)
            } else {
                0.0
            };
            fb[[m, k]] = weight;
        }
        if fb.row(m).iter().all(|&v| v == 0.0) {
            return Err(Error::Config(format!(
                "{n_mels} mel bands are too many for fft_size {} at {sample_rate} Hz: band {m} is empty",
                cfg.fft_size
            )));
        }
    }
    Ok(fb)
}

/// Projects a magnitude spectrogram through `filterbank`.
pub fn mel_spectrogram(mag: &Spectrogram, filterbank: &Array2<f64>) -> Result<Spectrogram> {
    if mag.kind != SpectrogramKind::Magnitude {
        return Err(Error::Contract(format!("mel projection expects magnitude, got {:?}", mag.kind)));
    }
    if filterbank.ncols() != mag.values.nrows() {
        return Err(Error::Contract(format!(
            "filterbank has {} columns, spectrogram has {} bins",
            filterbank.ncols(),
            mag.values.nrows()
        )));
    }
    Ok(Spectrogram {
        values: filterbank.dot(&mag.values),
        config: mag.config.clone(),
        kind: SpectrogramKind::Mel,
    })
}

/// Elementwise `ln(max(v, floor))`.
pub fn log_compress(s: &Spectrogram, floor: f64) -> Result<Spectrogram> {
    if !(floor > 0.0) {
        return Err(Error::Config(format!("log floor must be positive, got {floor}")));
    }
    let kind = match s.kind {
        SpectrogramKind::Magnitude => SpectrogramKind::LogMagnitude,
        SpectrogramKind::Mel => SpectrogramKind::LogMel,
        other => return Err(Error::Contract(format!("{other:?} is already log-compressed"))),
    };
    Ok(Spectrogram {
        values: s.values.mapv(|v| v.max(floor).ln()),
        config: s.config.clone(),
        kind,
    })
}

/// Dumps `values` for inspection: `u64` rows, `u64` cols (little endian), then
/// row-major little-endian `f32` data.
pub fn write_debug_dump(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
    write(&(values.nrows() as u64).to_le_bytes())?;
    write(&(values.ncols() as u64).to_le_bytes())?;
    for v in values.iter() {
        write(&(*v as f32).to_le_bytes())?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
