//! Python bindings: models, checkpoints, scene generation, STFT, metrics
//! and the gradient checks.
//!
//! Signals cross the boundary as lists of floats; multi-channel magnitude
//! input is a `k × frames × bins` nested list.

use std::path::PathBuf;

use multiview_core::dsp::{StftPlan, Waveform};
use multiview_core::models::{Model, ModelConfig, MultiChannelSpectra};
use multiview_core::scenegen::{generate_scene, LadderOrder, Protocol, SceneConfig};
use multiview_core::trainer::Checkpoint;
use multiview_core::Error;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(_) | Error::Path { .. } => PyIOError::new_err(err.to_string()),
        e if e.is_usage() => PyValueError::new_err(e.to_string()),
        Error::Dimension { .. } | Error::Format(_) | Error::Json(_) => PyValueError::new_err(err.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A multi-view denoiser with its parameters.
#[pyclass(name = "Model", module = "multiview")]
struct PyModel {
    inner: Model,
}

#[pymethods]
impl PyModel {
    /// Builds a freshly initialized model. `config` is a JSON object string;
    /// omitted fields take their defaults.
    #[new]
    #[pyo3(signature = (config = None, seed = 0))]
    fn new(config: Option<&str>, seed: u64) -> PyResult<Self> {
        let config: ModelConfig = match config {
            Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => ModelConfig::default(),
        };
        Ok(PyModel {
            inner: Model::new(config, seed).map_err(to_py)?,
        })
    }

    /// Loads the parameters stored in an MVNC checkpoint.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ckpt = Checkpoint::load(&path).map_err(to_py)?;
        Ok(PyModel {
            inner: ckpt.model().map_err(to_py)?,
        })
    }

    #[getter]
    fn config(&self) -> PyResult<String> {
        serde_json::to_string(self.inner.config()).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.params().num_scalars()
    }

    /// Parameter names with their shapes, in registration order.
    fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.inner
            .params()
            .iter()
            .map(|(n, t)| (n.to_string(), t.shape().to_vec()))
            .collect()
    }

    /// Predicted `frames × bins` magnitudes for `k × frames × bins` input.
    fn predict(&self, magnitudes: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<Vec<f64>>> {
        let k = magnitudes.len();
        let frames = magnitudes.first().map_or(0, |c| c.len());
        let bins = magnitudes.first().and_then(|c| c.first()).map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(k * frames * bins);
        for (i, ch) in magnitudes.iter().enumerate() {
            if ch.len() != frames || ch.iter().any(|r| r.len() != bins) {
                return Err(PyValueError::new_err(format!("channel {i} is not {frames} × {bins}")));
            }
            data.extend(ch.iter().flatten());
        }
        let input = MultiChannelSpectra::new(k, frames, bins, data).map_err(to_py)?;
        let out = self.inner.predict(&input).map_err(to_py)?;
        Ok(out.data().chunks(bins).map(|r| r.to_vec()).collect())
    }

    /// Denoises equal-length channel signals, resynthesizing with the last
    /// channel's phase.
    #[pyo3(signature = (channels, frame_size, hop, sample_rate = 16000))]
    fn denoise(&self, channels: Vec<Vec<f64>>, frame_size: usize, hop: usize, sample_rate: u32) -> PyResult<Vec<f64>> {
        if channels.is_empty() {
            return Err(PyValueError::new_err("need at least one channel"));
        }
        let plan = StftPlan::new(frame_size, hop).map_err(to_py)?;
        let waves: Vec<Waveform> = channels.into_iter().map(|s| Waveform::new(s, sample_rate)).collect();
        Ok(self.inner.denoise(&waves, &plan).map_err(to_py)?.samples)
    }
}

/// Row-major `frames × bins` values.
type Frames = Vec<Vec<f64>>;

/// Magnitudes and phases, each `frames × bins`.
#[pyfunction]
fn stft(samples: Vec<f64>, frame_size: usize, hop: usize) -> PyResult<(Frames, Frames)> {
    let plan = StftPlan::new(frame_size, hop).map_err(to_py)?;
    let spec = plan.analyze(&Waveform::new(samples, 16000)).map_err(to_py)?;
    let rows = |v: &[f64]| v.chunks(spec.bins()).map(|r| r.to_vec()).collect();
    Ok((rows(spec.magnitudes()), rows(spec.phases())))
}

/// Analysis followed by resynthesis; reconstructs the input.
#[pyfunction]
fn stft_roundtrip(samples: Vec<f64>, frame_size: usize, hop: usize) -> PyResult<Vec<f64>> {
    let plan = StftPlan::new(frame_size, hop).map_err(to_py)?;
    let spec = plan.analyze(&Waveform::new(samples, 16000)).map_err(to_py)?;
    Ok(multiview_core::dsp::istft(&spec).map_err(to_py)?.samples)
}

/// Scale-invariant SDR in dB, clamped to ±60.
#[pyfunction]
fn si_sdr(estimate: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    Ok(multiview_core::objectives::si_sdr(&estimate, &reference)
        .map_err(to_py)?
        .db())
}

/// The training loss `−(xᵀy)² / (xᵀx + ε)`.
#[pyfunction]
fn sdr_loss(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    multiview_core::objectives::sdr_loss_value(&x, &y).map_err(to_py)
}

/// A synthetic scene as a dict with `channels`, `clean`, `snrs_db` and
/// `sample_rate`. `scenario` is `dynamic`, `static_inc`, `static_dec` or
/// `static_random`.
#[pyfunction]
#[pyo3(signature = (scenario, k, seed, sample_rate = 16000, duration_s = 2.0))]
fn scene<'py>(
    py: Python<'py>,
    scenario: &str,
    k: usize,
    seed: u64,
    sample_rate: u32,
    duration_s: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let protocol = match scenario {
        "dynamic" => Protocol::Dynamic,
        "static_inc" => Protocol::Static(LadderOrder::Increasing),
        "static_dec" => Protocol::Static(LadderOrder::Decreasing),
        "static_random" => Protocol::Static(LadderOrder::Random),
        other => return Err(PyValueError::new_err(format!("unknown scenario `{other}`"))),
    };
    let config = SceneConfig {
        sample_rate,
        duration_s,
        ..SceneConfig::default()
    };
    let s = generate_scene(&config, protocol, k, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    let channels: Vec<Vec<f64>> = s.channels.into_iter().map(|w| w.samples).collect();
    d.set_item("channels", channels)?;
    d.set_item("clean", s.clean.samples)?;
    d.set_item("snrs_db", s.meta.snrs_db)?;
    d.set_item("sample_rate", sample_rate)?;
    Ok(d)
}

/// Runs every finite-difference check; returns `(name, max_rel_error, passed)`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn gradcheck(seed: u64) -> Vec<(String, f64, bool)> {
    multiview_core::verify::run_checks(&multiview_core::verify::registry(), seed)
        .into_iter()
        .map(|o| (o.name, o.max_rel_error, o.passed))
        .collect()
}

#[pymodule]
fn multiview(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", multiview_core::VERSION)?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(stft_roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(si_sdr, m)?)?;
    m.add_function(wrap_pyfunction!(sdr_loss, m)?)?;
    m.add_function(wrap_pyfunction!(scene, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    Ok(())
}
