use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};

/// What to do with a final partial segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    #[default]
    DropTail,
    PadTail,
}

/// Number of samples in a segment of `seconds` at `sample_rate`.
pub(crate) fn segment_samples(seconds: f64, sample_rate: u32) -> Result<usize> {
    if !(seconds > 0.0) || !seconds.is_finite() {
        return Err(Error::Config(format!(
            "segment length must be a positive number of seconds, got {seconds}"
        )));
    }
    let n = (seconds * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::Config(format!(
            "segment length {seconds} s is shorter than one sample at {sample_rate} Hz"
        )));
    }
    Ok(n)
}

/// Splits `w` into consecutive segments of `round(seconds * sample_rate)` samples.
pub fn segment(w: &Waveform, seconds: f64, policy: TailPolicy) -> Result<Vec<Waveform>> {
    let n = segment_samples(seconds, w.sample_rate())?;
    let full = w.len() / n;
    let count = match policy {
        TailPolicy::DropTail => full,
        TailPolicy::PadTail => w.len().div_ceil(n),
    };
    Ok((0..count).map(|k| w.window(k * n, n)).collect())
}
