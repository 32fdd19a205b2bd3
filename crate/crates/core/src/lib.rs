//! Power-set stem augmentation, silence-aware losses and a silence-aware
//! evaluation protocol for multi-singer source separation.
//!
//! The crate is organised bottom-up:
//!
//! - [`audio`]: waveforms, WAV I/O, segmentation.
//! - [`manifest`]: the line-delimited JSON dataset manifest.
//! - [`augment`]: power-set mixture generation.
//! - [`spectral`]: STFT/ISTFT, mel filterbanks, log compression.
//! - [`loss`]: waveform L1, multi-scale mel, multi-resolution STFT and the Snake activation.
//! - [`metrics`]: SI-SDR, SDRi, RMS-dBFS, stem detection and report aggregation.
//! - [`separators`]: oracle, passthrough, zeros and ideal-ratio-mask baselines.
//! - [`config`] and [`pipeline`]: the run configuration and CLI commands.

pub mod audio;
pub mod augment;
pub mod config;
pub mod error;
pub mod loss;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod separators;
pub mod spectral;

pub use audio::{read_wav, segment, write_wav, StemClip, SubsetMixture, TailPolicy, WavEncoding, Waveform};
pub use augment::{augment_dataset, enumerate_subsets, mix_subset, AugmentConfig};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use loss::{composite_loss, l1_waveform, mel_loss, snake, snake_grad, stft_loss, LossBreakdown, LossConfig};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use metrics::{
    detect_stem, detection_f1, evaluate_entry, rms_dbfs, sdri, si_sdr, EvalConfig, EvalReport, StemScore,
};
pub use separators::{separate, SeparatorKind, SeparatorSpec};
pub use spectral::{istft, log_compress, mel_filterbank, stft, SpectralConfig, Spectrogram};
