//! Python bindings for `stemset`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use stemset::metrics::{self, StemScore};
use stemset::pipeline;
use stemset::{Error, LossConfig as CoreLossConfig, RunConfig, SeparatorKind, SeparatorSpec, SpectralConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Mono audio signal with a sample rate.
#[pyclass(module = "stemset_py", skip_from_py_object)]
#[derive(Clone)]
struct Waveform {
    inner: stemset::Waveform,
}

#[pymethods]
impl Waveform {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        Ok(Self {
            inner: stemset::Waveform::new(samples, sample_rate).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn zeros(len: usize, sample_rate: u32) -> PyResult<Self> {
        if sample_rate == 0 {
            return Err(PyValueError::new_err("sample_rate must be positive"));
        }
        Ok(Self {
            inner: stemset::Waveform::zeros(len, sample_rate),
        })
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    #[getter]
    fn duration_s(&self) -> f64 {
        self.inner.duration_s()
    }

    fn scaled(&self, gain: f64) -> Self {
        Self {
            inner: self.inner.scaled(gain),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Waveform(len={}, sample_rate={})",
            self.inner.len(),
            self.inner.sample_rate()
        )
    }
}

/// Weights and resolutions of the composite training loss.
#[pyclass(module = "stemset_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct LossConfig {
    inner: CoreLossConfig,
}

#[pymethods]
impl LossConfig {
    #[new]
    #[pyo3(signature = (weight_l1=1.0, weight_mel=0.7, weight_stft=0.3, stft_windows=None, mel_scales=None, log_floor=1e-5))]
    fn new(
        weight_l1: f64,
        weight_mel: f64,
        weight_stft: f64,
        stft_windows: Option<Vec<usize>>,
        mel_scales: Option<Vec<(usize, usize)>>,
        log_floor: f64,
    ) -> PyResult<Self> {
        let mut inner = CoreLossConfig {
            weight_l1,
            weight_mel,
            weight_stft,
            log_floor,
            ..CoreLossConfig::default()
        };
        if let Some(w) = stft_windows {
            inner.stft_windows = w;
        }
        if let Some(s) = mel_scales {
            inner.mel_scales = s;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn stft_windows(&self) -> Vec<usize> {
        self.inner.stft_windows.clone()
    }

    #[getter]
    fn mel_scales(&self) -> Vec<(usize, usize)> {
        self.inner.mel_scales.clone()
    }

    #[getter]
    fn weights(&self) -> (f64, f64, f64) {
        (self.inner.weight_l1, self.inner.weight_mel, self.inner.weight_stft)
    }
}

fn loss_cfg(config: Option<PyRef<'_, LossConfig>>) -> CoreLossConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (path))]
fn read_wav(path: PathBuf) -> PyResult<Waveform> {
    Ok(Waveform {
        inner: stemset::read_wav(path).map_err(to_py)?,
    })
}

/// Writes `wave` and returns how many samples fell outside [-1, 1].
#[pyfunction]
#[pyo3(signature = (path, wave, encoding="float32"))]
fn write_wav(path: PathBuf, wave: PyRef<'_, Waveform>, encoding: &str) -> PyResult<usize> {
    let enc = match encoding {
        "float32" => stemset::WavEncoding::Float32,
        "pcm16" => stemset::WavEncoding::Pcm16,
        other => return Err(PyValueError::new_err(format!("unknown encoding {other:?}"))),
    };
    Ok(stemset::write_wav(path, &wave.inner, enc).map_err(to_py)?.out_of_range)
}

#[pyfunction]
#[pyo3(signature = (estimate, reference, cap=metrics::DEFAULT_SI_SDR_CAP_DB))]
fn si_sdr(estimate: PyRef<'_, Waveform>, reference: PyRef<'_, Waveform>, cap: f64) -> PyResult<f64> {
    metrics::si_sdr_with_cap(&estimate.inner, &reference.inner, cap).map_err(to_py)
}

#[pyfunction]
fn si_sdr_uncapped(estimate: PyRef<'_, Waveform>, reference: PyRef<'_, Waveform>) -> PyResult<f64> {
    metrics::si_sdr_uncapped(&estimate.inner, &reference.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (estimate, reference, mixture, cap=metrics::DEFAULT_SI_SDR_CAP_DB))]
fn sdri(
    estimate: PyRef<'_, Waveform>,
    reference: PyRef<'_, Waveform>,
    mixture: PyRef<'_, Waveform>,
    cap: f64,
) -> PyResult<f64> {
    metrics::sdri_with_cap(&estimate.inner, &reference.inner, &mixture.inner, cap).map_err(to_py)
}

#[pyfunction]
fn rms_dbfs(wave: PyRef<'_, Waveform>) -> f64 {
    metrics::rms_dbfs(&wave.inner)
}

#[pyfunction]
#[pyo3(signature = (wave, threshold_dbfs=metrics::DEFAULT_DETECTION_THRESHOLD_DBFS))]
fn detect_stem(wave: PyRef<'_, Waveform>, threshold_dbfs: f64) -> bool {
    metrics::detect_stem(&wave.inner, threshold_dbfs)
}

/// Precision, recall and F1 from `(label, detected, present)` triples.
#[pyfunction]
#[pyo3(signature = (observations, per_label=false))]
fn detection_f1(py: Python<'_>, observations: Vec<(String, bool, bool)>, per_label: bool) -> PyResult<Py<PyAny>> {
    let scores: Vec<StemScore> = observations
        .into_iter()
        .map(|(label, detected, present)| StemScore {
            label,
            condition: if present {
                metrics::Condition::Active
            } else {
                metrics::Condition::Silent
            },
            si_sdr: None,
            sdri: None,
            rms_dbfs: f64::NAN,
            detected,
            reference_present: present,
        })
        .collect();
    serialize(py, &metrics::detection_f1(&scores, per_label))
}

#[pyfunction]
fn snake(x: f64, a: f64) -> PyResult<f64> {
    if !(a > 0.0) {
        return Err(PyValueError::new_err("a must be positive"));
    }
    Ok(stemset::snake(x, a))
}

#[pyfunction]
fn snake_grad(x: f64, a: f64) -> f64 {
    stemset::snake_grad(x, a)
}

#[pyfunction]
fn l1_loss(estimate: PyRef<'_, Waveform>, target: PyRef<'_, Waveform>) -> PyResult<f64> {
    stemset::l1_waveform(&estimate.inner, &target.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (estimate, target, config=None))]
fn mel_loss(estimate: PyRef<'_, Waveform>, target: PyRef<'_, Waveform>, config: Option<PyRef<'_, LossConfig>>) -> PyResult<f64> {
    stemset::mel_loss(&estimate.inner, &target.inner, &loss_cfg(config)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (estimate, target, config=None))]
fn stft_loss(estimate: PyRef<'_, Waveform>, target: PyRef<'_, Waveform>, config: Option<PyRef<'_, LossConfig>>) -> PyResult<f64> {
    stemset::stft_loss(&estimate.inner, &target.inner, &loss_cfg(config)).map_err(to_py)
}

/// Returns a dict with `l1`, `mel`, `stft` and `composite`.
#[pyfunction]
#[pyo3(signature = (estimate, target, config=None))]
fn composite_loss(
    py: Python<'_>,
    estimate: PyRef<'_, Waveform>,
    target: PyRef<'_, Waveform>,
    config: Option<PyRef<'_, LossConfig>>,
) -> PyResult<Py<PyAny>> {
    let b = stemset::composite_loss(&estimate.inner, &target.inner, &loss_cfg(config)).map_err(to_py)?;
    serialize(py, &b)
}

#[pyfunction]
#[pyo3(signature = (labels, min_size=1))]
fn enumerate_subsets(labels: Vec<String>, min_size: usize) -> Vec<Vec<String>> {
    stemset::enumerate_subsets(&labels, min_size)
}

/// Sums the stems named in `subset`; `stems` is an ordered list of `(label, Waveform)`.
#[pyfunction]
fn mix_subset(stems: Vec<(String, PyRef<'_, Waveform>)>, subset: Vec<String>) -> PyResult<Waveform> {
    let stems = stems.into_iter().map(|(l, w)| (l, w.inner.clone())).collect();
    let clip = stemset::StemClip::new("clip", stems).map_err(to_py)?;
    let mix = stemset::mix_subset(&clip, &subset).map_err(to_py)?;
    Ok(Waveform {
        inner: mix.mixture().clone(),
    })
}

fn separator_kind(kind: &str) -> PyResult<SeparatorKind> {
    Ok(match kind {
        "oracle_targets" => SeparatorKind::OracleTargets,
        "passthrough" => SeparatorKind::Passthrough,
        "zeros" => SeparatorKind::Zeros,
        "ideal_ratio_mask" => SeparatorKind::IdealRatioMask,
        other => return Err(PyValueError::new_err(format!("unknown separator {other:?}"))),
    })
}

fn separator_spec(kind: &str, window: usize, hop: Option<usize>, mask_exponent: f64) -> PyResult<SeparatorSpec> {
    Ok(SeparatorSpec {
        kind: separator_kind(kind)?,
        spectral: SpectralConfig::linear(window, hop.unwrap_or(window / 4)),
        mask_exponent,
    })
}

/// Runs a reference separator on one mixture and returns `{label: Waveform}`.
#[pyfunction]
#[pyo3(signature = (kind, mixture, labels, references=None, window=1024, hop=None, mask_exponent=1.0))]
fn separate(
    kind: &str,
    mixture: PyRef<'_, Waveform>,
    labels: Vec<String>,
    references: Option<BTreeMap<String, PyRef<'_, Waveform>>>,
    window: usize,
    hop: Option<usize>,
    mask_exponent: f64,
) -> PyResult<BTreeMap<String, Waveform>> {
    let spec = separator_spec(kind, window, hop, mask_exponent)?;
    let refs: Option<BTreeMap<String, stemset::Waveform>> =
        references.map(|r| r.into_iter().map(|(k, w)| (k, w.inner.clone())).collect());
    let out = stemset::separate(&spec, &mixture.inner, refs.as_ref(), &labels).map_err(to_py)?;
    Ok(out.into_iter().map(|(k, inner)| (k, Waveform { inner })).collect())
}

/// Builds the augmented dataset described by a TOML run config.
#[pyfunction]
fn augment(py: Python<'_>, config: PathBuf) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig::load(config).map_err(to_py)?;
    let summary = py.detach(|| pipeline::cmd_augment(&cfg)).map_err(to_py)?;
    serialize(py, &summary)
}

/// Runs a reference separator over the augmented dataset.
#[pyfunction]
#[pyo3(signature = (config, kind, out=None, window=1024, hop=None, mask_exponent=1.0))]
fn separate_dataset(
    py: Python<'_>,
    config: PathBuf,
    kind: &str,
    out: Option<PathBuf>,
    window: usize,
    hop: Option<usize>,
    mask_exponent: f64,
) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig::load(config).map_err(to_py)?;
    let spec = separator_spec(kind, window, hop, mask_exponent)?;
    let summary = py
        .detach(|| pipeline::cmd_separate(&cfg, &spec, out.as_deref()))
        .map_err(to_py)?;
    serialize(py, &summary)
}

/// Scores an estimates directory and returns the full report as a dict.
#[pyfunction]
#[pyo3(signature = (config, estimates, out=None))]
fn evaluate(py: Python<'_>, config: PathBuf, estimates: PathBuf, out: Option<PathBuf>) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig::load(config).map_err(to_py)?;
    let (_, report) = py
        .detach(|| pipeline::cmd_evaluate(&cfg, &estimates, out.as_deref()))
        .map_err(to_py)?;
    serialize(py, &report)
}

#[pymodule]
fn stemset_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init_module(m)
}

/// Registers every class and function on `m`.
pub fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Waveform>()?;
    m.add_class::<LossConfig>()?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add_function(wrap_pyfunction!(si_sdr, m)?)?;
    m.add_function(wrap_pyfunction!(si_sdr_uncapped, m)?)?;
    m.add_function(wrap_pyfunction!(sdri, m)?)?;
    m.add_function(wrap_pyfunction!(rms_dbfs, m)?)?;
    m.add_function(wrap_pyfunction!(detect_stem, m)?)?;
    m.add_function(wrap_pyfunction!(detection_f1, m)?)?;
    m.add_function(wrap_pyfunction!(snake, m)?)?;
    m.add_function(wrap_pyfunction!(snake_grad, m)?)?;
    m.add_function(wrap_pyfunction!(l1_loss, m)?)?;
    m.add_function(wrap_pyfunction!(mel_loss, m)?)?;
    m.add_function(wrap_pyfunction!(stft_loss, m)?)?;
    m.add_function(wrap_pyfunction!(composite_loss, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_subsets, m)?)?;
    m.add_function(wrap_pyfunction!(mix_subset, m)?)?;
    m.add_function(wrap_pyfunction!(separate, m)?)?;
    m.add_function(wrap_pyfunction!(augment, m)?)?;
    m.add_function(wrap_pyfunction!(separate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
