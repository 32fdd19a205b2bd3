//! Fixtures and independent reference implementations shared by the
//! integration tests. Nothing here calls into the crate's DSP or metric code.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stemset::{write_wav, WavEncoding, Waveform};

pub fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn noise(rng: &mut impl Rng, len: usize, amp: f64, sr: u32) -> Waveform {
    Waveform::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect(), sr).unwrap()
}

pub fn sine(freq: f64, amp: f64, len: usize, sr: u32) -> Waveform {
    Waveform::new(
        (0..len).map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin()).collect(),
        sr,
    )
    .unwrap()
}

pub fn add(a: &Waveform, b: &Waveform) -> Waveform {
    Waveform::new(
        a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect(),
        a.sample_rate(),
    )
    .unwrap()
}

/// Writes one clip directory with a tone-plus-noise stem per label, stored as
/// float32 so the values are exactly representable on read-back.
pub fn write_clip(root: &Path, clip_id: &str, labels: &[String], sr: u32, seconds: f64, seed: u64) -> PathBuf {
    let dir = root.join(clip_id);
    std::fs::create_dir_all(&dir).unwrap();
    let mut r = rng(seed);
    let len = (seconds * sr as f64).round() as usize;
    for (i, label) in labels.iter().enumerate() {
        let f = 110.0 * (i + 1) as f64 * r.gen_range(0.9..1.1);
        let tone = sine(f, 0.3, len, sr);
        let n = noise(&mut r, len, 0.05, sr);
        let stem = Waveform::new(
            add(&tone, &n).samples().iter().map(|&v| v as f32 as f64).collect(),
            sr,
        )
        .unwrap();
        write_wav(dir.join(format!("{label}.wav")), &stem, WavEncoding::Float32).unwrap();
    }
    dir
}

/// Writes a run config with paths relative to `dir`.
pub fn write_config(dir: &Path, labels: &[String], segment_length_s: f64, extra: &str) -> PathBuf {
    let quoted: Vec<String> = labels.iter().map(|l| format!("{l:?}")).collect();
    let text = format!(
        "labels = [{}]\n{extra}\n[augment]\nsegment_length_s = {segment_length_s:?}\n\n[paths]\ninput_dir = \"stems\"\nwork_dir = \"work\"\noutput_dir = \"out\"\n",
        quoted.join(", ")
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn count_files(root: &Path, name: &str) -> usize {
    walk(root).into_iter().filter(|p| p.file_name().is_some_and(|n| n == name)).count()
}

pub fn walk(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// SI-SDR oracles
// ---------------------------------------------------------------------------

/// Direct evaluation of the projection definition, one explicit loop per term.
pub fn brute_si_sdr(est: &[f64], reference: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut ss = 0.0;
    for i in 0..reference.len() {
        dot += est[i] * reference[i];
        ss += reference[i] * reference[i];
    }
    let alpha = dot / ss;
    let target: Vec<f64> = reference.iter().map(|v| alpha * v).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..reference.len() {
        num += target[i] * target[i];
        den += (target[i] - est[i]).powi(2);
    }
    10.0 * (num / den).log10()
}

/// The same quantity through the cosine between the two signals: `rho^2 / (1 - rho^2)`.
pub fn cosine_si_sdr(est: &[f64], reference: &[f64]) -> f64 {
    let dot: f64 = est.iter().zip(reference).map(|(a, b)| a * b).sum();
    let ee: f64 = est.iter().map(|a| a * a).sum();
    let rr: f64 = reference.iter().map(|a| a * a).sum();
    let rho2 = dot * dot / (ee * rr);
    10.0 * (rho2 / (1.0 - rho2)).log10()
}

// ---------------------------------------------------------------------------
// Naive spectral reference pipeline
// ---------------------------------------------------------------------------

/// Magnitude spectrogram as `frames x bins`, computed with a direct DFT.
///
/// Centred frames with `window / 2` zeros on each side, `ceil(len / hop)` frames,
/// periodic Hann window, no extra zero padding.
pub fn naive_magnitudes(x: &[f64], window: usize, hop: usize) -> Vec<Vec<f64>> {
    let n = window;
    let hann: Vec<f64> = (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect();
    let cos: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
    let frames = x.len().div_ceil(hop);
    let mut out = Vec::with_capacity(frames);
    let mut frame = vec![0.0; n];
    for t in 0..frames {
        let centre = (t * hop) as i64;
        for (i, f) in frame.iter_mut().enumerate() {
            let idx = centre - (n / 2) as i64 + i as i64;
            *f = if idx >= 0 && (idx as usize) < x.len() { x[idx as usize] * hann[i] } else { 0.0 };
        }
        let mut mags = Vec::with_capacity(n / 2 + 1);
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in frame.iter().enumerate() {
                if v != 0.0 {
                    let j = (k * i) % n;
                    re += v * cos[j];
                    im -= v * sin[j];
                }
            }
            mags.push((re * re + im * im).sqrt());
        }
        out.push(mags);
    }
    out
}

/// HTK triangles written as `max(0, min(rising, falling))`, `n_mels x bins`.
pub fn naive_mel_bank(n_mels: usize, n_fft: usize, sr: u32) -> Vec<Vec<f64>> {
    let to_mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let to_hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let top = to_mel(sr as f64 / 2.0);
    let points: Vec<f64> = (0..n_mels + 2).map(|i| to_hz(top * i as f64 / (n_mels + 1) as f64)).collect();
    (0..n_mels)
        .map(|m| {
            (0..=n_fft / 2)
                .map(|k| {
                    let f = k as f64 * sr as f64 / n_fft as f64;
                    let up = (f - points[m]) / (points[m + 1] - points[m]);
                    let down = (points[m + 2] - f) / (points[m + 2] - points[m + 1]);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

fn mean_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn flat_log(m: &[Vec<f64>], floor: f64) -> Vec<f64> {
    m.iter().flatten().map(|v| v.max(floor).ln()).collect()
}

pub fn naive_stft_loss(e: &[f64], t: &[f64], windows: &[usize], floor: f64) -> f64 {
    let mut total = 0.0;
    for &w in windows {
        let me = naive_magnitudes(e, w, w / 4);
        let mt = naive_magnitudes(t, w, w / 4);
        let lin = mean_abs(&me.concat(), &mt.concat());
        let log = mean_abs(&flat_log(&me, floor), &flat_log(&mt, floor));
        total += lin + log;
    }
    total / windows.len() as f64
}

pub fn naive_mel_loss(e: &[f64], t: &[f64], scales: &[(usize, usize)], sr: u32, floor: f64) -> f64 {
    let mut total = 0.0;
    for &(n_mels, w) in scales {
        let bank = naive_mel_bank(n_mels, w, sr);
        let project = |mags: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            mags.iter()
                .map(|frame| bank.iter().map(|row| row.iter().zip(frame).map(|(a, b)| a * b).sum()).collect())
                .collect()
        };
        let me = project(naive_magnitudes(e, w, w / 4));
        let mt = project(naive_magnitudes(t, w, w / 4));
        total += mean_abs(&flat_log(&me, floor), &flat_log(&mt, floor));
    }
    total / scales.len() as f64
}

// ---------------------------------------------------------------------------
// Detection oracle
// ---------------------------------------------------------------------------

/// `(precision, recall, f1)` by explicit confusion-matrix counting.
pub fn brute_prf(pairs: &[(bool, bool)]) -> (f64, f64, f64) {
    let tp = pairs.iter().filter(|&&(d, p)| d && p).count() as f64;
    let fp = pairs.iter().filter(|&&(d, p)| d && !p).count() as f64;
    let fn_ = pairs.iter().filter(|&&(d, p)| !d && p).count() as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
    (precision, recall, f1)
}
