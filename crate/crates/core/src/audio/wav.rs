use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

/// Outcome of a write: how many samples fell outside `[-1, 1]`.
///
/// For `Pcm16` those samples were clipped. `Float32` stores them verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    pub out_of_range: usize,
}

/// Reads a RIFF/WAVE file as a mono waveform.
///
/// Accepts 16/24-bit integer PCM and 32-bit float. Integer samples are divided by
/// `2^(bits-1)`; multichannel frames are averaged.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| Error::format(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::format(path, "zero channels"));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1u32 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| Error::format(path, e))?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| Error::format(path, e))?,
        (format, bits) => {
            return Err(Error::format(
                path,
                format!("unsupported encoding: {bits}-bit {format:?}"),
            ))
        }
    };

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Waveform::new(samples, spec.sample_rate).map_err(|e| Error::format(path, e))
}

/// Writes `w` as a mono WAV file.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, encoding: WavEncoding) -> Result<WriteReport> {
    let path = path.as_ref();
    let (bits_per_sample, sample_format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate(),
        bits_per_sample,
        sample_format,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = WavWriter::new(BufWriter::new(file), spec).map_err(|e| hound_io(path, e))?;

    let mut report = WriteReport::default();
    for &x in w.samples() {
        if !(-1.0..=1.0).contains(&x) {
            report.out_of_range += 1;
        }
        let res = match encoding {
            WavEncoding::Pcm16 => {
                let v = (x.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0);
                writer.write_sample(v as i16)
            }
            WavEncoding::Float32 => writer.write_sample(x as f32),
        };
        res.map_err(|e| hound_io(path, e))?;
    }
    writer.finalize().map_err(|e| hound_io(path, e))?;
    Ok(report)
}

fn hound_io(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other),
    }
}
