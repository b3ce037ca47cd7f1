use std::path::PathBuf;

use ndarray::Array3;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use prosody_probe::analysis::layer_contribution as core_layer_contribution;
use prosody_probe::data::{load_manifest, read_wav_mono_16k, FeatureCache, Waveform};
use prosody_probe::probe::{self, PooledExample, ProbeConfig};
use prosody_probe::prosody::{self as prosody, ProsodyKind};
use prosody_probe::synth;
use prosody_probe::tasks::{ClassificationTask, HorizonSpec, ResultsStore, RunOptions, TaskSpec};
use prosody_probe::upstream::{self, Mode, UpstreamRegistry};
use prosody_probe::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Audio { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn mode(causal: bool) -> Mode {
    if causal {
        Mode::Causal
    } else {
        Mode::Full
    }
}

fn registry(path: Option<PathBuf>) -> PyResult<UpstreamRegistry> {
    match path {
        Some(p) => UpstreamRegistry::load(&p).map_err(py_err),
        None => Ok(UpstreamRegistry::with_builtins()),
    }
}

/// Per-frame log-pitch or log-energy with a voicing mask.
#[pyclass(name = "ProsodyTrack", module = "prosody_probe", frozen)]
pub struct PyProsodyTrack {
    inner: prosody::ProsodyTrack,
}

#[pymethods]
impl PyProsodyTrack {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn values(&self) -> Vec<f32> {
        self.inner.values.clone()
    }

    #[getter]
    fn voiced(&self) -> Vec<bool> {
        self.inner.voiced.clone()
    }

    #[getter]
    fn hop_ms(&self) -> u32 {
        self.inner.hop_ms
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ProsodyTrack(kind={}, frames={}, voiced={})",
            self.inner.kind.as_str(),
            self.inner.len(),
            self.inner.num_voiced()
        )
    }
}

/// Hidden states of every layer for one utterance, shape (L, T, D).
#[pyclass(name = "LayerFeatureStack", module = "prosody_probe", frozen)]
pub struct PyLayerFeatureStack {
    inner: upstream::LayerFeatureStack,
}

#[pymethods]
impl PyLayerFeatureStack {
    #[new]
    #[pyo3(signature = (layers, stride_ms, utterance_id = "utt".to_string(), causal = false))]
    fn new(layers: Vec<Vec<Vec<f32>>>, stride_ms: u32, utterance_id: String, causal: bool) -> PyResult<Self> {
        let l = layers.len();
        let t = layers.first().map_or(0, Vec::len);
        let d = layers.first().and_then(|x| x.first()).map_or(0, Vec::len);
        let flat: Vec<f32> = layers.into_iter().flatten().flatten().collect();
        let arr = Array3::from_shape_vec((l, t, d), flat)
            .map_err(|_| PyValueError::new_err("layers must be a rectangular L x T x D nested list"))?;
        upstream::LayerFeatureStack::new(arr, stride_ms, utterance_id, mode(causal))
            .map(|inner| PyLayerFeatureStack { inner })
            .map_err(py_err)
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.inner.num_layers()
    }

    #[getter]
    fn num_frames(&self) -> usize {
        self.inner.num_frames()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn stride_ms(&self) -> u32 {
        self.inner.stride_ms
    }

    #[getter]
    fn utterance_id(&self) -> String {
        self.inner.utterance_id.clone()
    }

    #[getter]
    fn causal(&self) -> bool {
        self.inner.mode == Mode::Causal
    }

    fn layer(&self, index: usize) -> PyResult<Vec<Vec<f32>>> {
        if index >= self.inner.num_layers() {
            return Err(py_err(Error::LayerOutOfRange {
                index,
                num_layers: self.inner.num_layers(),
            }));
        }
        Ok(self.inner.layer(index).outer_iter().map(|r| r.to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "LayerFeatureStack(id={}, layers={}, frames={}, dim={}, mode={})",
            self.inner.utterance_id,
            self.inner.num_layers(),
            self.inner.num_frames(),
            self.inner.dim(),
            self.inner.mode.as_str()
        )
    }
}

/// Trainable per-layer scalars, normalized by softmax unless `"raw"`.
#[pyclass(name = "LayerWeights", module = "prosody_probe", frozen)]
pub struct PyLayerWeights {
    inner: probe::LayerWeights,
}

#[pymethods]
impl PyLayerWeights {
    #[new]
    #[pyo3(signature = (raw, normalization = "softmax"))]
    fn new(raw: Vec<f64>, normalization: &str) -> PyResult<Self> {
        let normalization = match normalization {
            "softmax" => probe::Normalization::Softmax,
            "raw" => probe::Normalization::Raw,
            other => return Err(PyValueError::new_err(format!("unknown normalization `{other}`"))),
        };
        Ok(PyLayerWeights {
            inner: probe::LayerWeights::from_raw(raw, normalization),
        })
    }

    #[getter]
    fn raw(&self) -> Vec<f64> {
        self.inner.raw.clone()
    }

    fn normalized(&self) -> Vec<f64> {
        self.inner.normalized()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A probe saved by a task run.
#[pyclass(name = "TrainedProbe", module = "prosody_probe", frozen)]
pub struct PyTrainedProbe {
    inner: probe::TrainedProbe,
}

#[pymethods]
impl PyTrainedProbe {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        probe::TrainedProbe::load(&path)
            .map(|inner| PyTrainedProbe { inner })
            .map_err(py_err)
    }

    #[getter]
    fn task(&self) -> String {
        self.inner.task.clone()
    }

    #[getter]
    fn learning_rate(&self) -> f64 {
        self.inner.config.learning_rate
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint.clone()
    }

    fn layer_weights(&self) -> Vec<f64> {
        self.inner.layer_weights.normalized()
    }

    fn final_loss(&self) -> Option<f64> {
        self.inner.final_loss()
    }

    fn predict_frames(&self, stack: &PyLayerFeatureStack) -> PyResult<Vec<f64>> {
        self.inner.predict_frames(&stack.inner).map_err(py_err)
    }

    fn classify(&self, stack: &PyLayerFeatureStack) -> PyResult<usize> {
        let pooled = PooledExample::from_stack(&stack.inner, 0).map_err(py_err)?;
        self.inner.classify(pooled.layer_means.view()).map_err(py_err)
    }
}

#[pyfunction]
fn read_wav(path: PathBuf) -> PyResult<Vec<f32>> {
    read_wav_mono_16k(&path).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (samples, hop_ms = 10))]
fn extract_pitch(samples: Vec<f32>, hop_ms: u32) -> PyResult<PyProsodyTrack> {
    let track = prosody::extract_track(&Waveform::new("py", samples), ProsodyKind::Pitch, hop_ms).map_err(py_err)?;
    Ok(PyProsodyTrack { inner: track })
}

#[pyfunction]
#[pyo3(signature = (samples, hop_ms = 10))]
fn extract_energy(samples: Vec<f32>, hop_ms: u32) -> PyResult<PyProsodyTrack> {
    let track = prosody::extract_track(&Waveform::new("py", samples), ProsodyKind::Energy, hop_ms).map_err(py_err)?;
    Ok(PyProsodyTrack { inner: track })
}

/// Runs a registered upstream over 16 kHz mono samples.
#[pyfunction]
#[pyo3(signature = (upstream, samples, causal = false, registry_path = None, utterance_id = "utt".to_string()))]
fn extract_features(
    upstream: &str,
    samples: Vec<f32>,
    causal: bool,
    registry_path: Option<PathBuf>,
    utterance_id: String,
) -> PyResult<PyLayerFeatureStack> {
    let up = registry(registry_path)?.instantiate(upstream).map_err(py_err)?;
    let stack = upstream::extract_layer_features(up.as_ref(), &Waveform::new(utterance_id, samples), mode(causal))
        .map_err(py_err)?;
    Ok(PyLayerFeatureStack { inner: stack })
}

/// Weighted sum over layers, shape (T, D).
#[pyfunction]
fn aggregate(stack: &PyLayerFeatureStack, weights: &PyLayerWeights) -> PyResult<Vec<Vec<f64>>> {
    let y = probe::aggregate(&stack.inner, &weights.inner).map_err(py_err)?;
    Ok(y.outer_iter().map(|r| r.to_vec()).collect())
}

/// Mean squared error over voiced frames; `None` when nothing is voiced.
#[pyfunction]
fn masked_mse(predictions: Vec<f64>, track: &PyProsodyTrack) -> PyResult<Option<f64>> {
    probe::masked_mse(&predictions, &track.inner)
        .map(|l| l.value())
        .map_err(py_err)
}

/// Frames skipped ahead for an FVP horizon in seconds.
#[pyfunction]
fn horizon_frames(seconds: f64, stride_ms: u32) -> PyResult<usize> {
    HorizonSpec::from_seconds(seconds, stride_ms)
        .map(|h| h.frame_offset)
        .map_err(py_err)
}

#[pyfunction]
fn layer_contribution(
    py: Python<'_>,
    stacks: Vec<PyRef<'_, PyLayerFeatureStack>>,
    probe: &PyTrainedProbe,
    upstream: &str,
) -> PyResult<Py<PyAny>> {
    let stacks: Vec<upstream::LayerFeatureStack> = stacks.iter().map(|s| s.inner.clone()).collect();
    let profile = core_layer_contribution(&stacks, &probe.inner, upstream).map_err(py_err)?;
    json_to_py(py, &profile)
}

/// Trains and evaluates one task; returns the result record as a dict.
#[pyfunction]
#[pyo3(signature = (
    task, manifest, upstream, feature = None, horizon = None, registry_path = None,
    lr_sweep = false, learning_rate = 1e-3, train_steps = None, seed = 0, cache_dir = None, results_path = None
))]
#[allow(clippy::too_many_arguments)]
fn run_task(
    py: Python<'_>,
    task: &str,
    manifest: PathBuf,
    upstream: &str,
    feature: Option<&str>,
    horizon: Option<f64>,
    registry_path: Option<PathBuf>,
    lr_sweep: bool,
    learning_rate: f64,
    train_steps: Option<usize>,
    seed: u64,
    cache_dir: Option<PathBuf>,
    results_path: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let up = registry(registry_path)?.instantiate(upstream).map_err(py_err)?;
    let feature = || -> PyResult<ProsodyKind> {
        feature
            .ok_or_else(|| PyValueError::new_err(format!("{task} needs a feature")))?
            .parse()
            .map_err(py_err)
    };
    let spec = match task {
        "ProR" => TaskSpec::ProR(feature()?),
        "XL-ProR" => TaskSpec::CrossLingual(feature()?),
        "FVP" => {
            let seconds = horizon.ok_or_else(|| PyValueError::new_err("FVP needs a horizon"))?;
            let h = HorizonSpec::from_seconds(seconds, up.spec().stride_ms).map_err(py_err)?;
            TaskSpec::Fvp(feature()?, h)
        }
        other => TaskSpec::Classification(other.parse::<ClassificationTask>().map_err(py_err)?),
    };
    let manifest = load_manifest(&manifest).map_err(py_err)?;
    let mut config = ProbeConfig::for_task(manifest.task);
    config.learning_rate = learning_rate;
    config.seed = seed;
    if let Some(steps) = train_steps {
        config.train_steps = steps;
    }
    let mut opts = RunOptions::new(config);
    opts.lr_sweep = lr_sweep;
    let cache = cache_dir.map(FeatureCache::open).transpose().map_err(py_err)?;
    let run = py
        .detach(|| spec.run(up.as_ref(), &manifest, cache, &opts))
        .map_err(py_err)?;
    if let Some(path) = results_path {
        ResultsStore::open(path)
            .and_then(|s| s.append(&run.result))
            .map_err(py_err)?;
    }
    json_to_py(py, &run.result)
}

#[pyfunction]
fn read_results(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    let rows = ResultsStore::open(path)
        .and_then(|s| s.read_all())
        .map_err(py_err)?;
    json_to_py(py, &rows)
}

/// Writes a synthetic frame-level corpus of pitch glides and its manifest.
#[pyfunction]
#[pyo3(signature = (directory, count, seconds = 1.0, seed = 0))]
fn write_glide_corpus(directory: PathBuf, count: usize, seconds: f64, seed: u64) -> PyResult<PathBuf> {
    let manifest = synth::write_glide_corpus(&directory, count, seconds, seed).map_err(py_err)?;
    let path = directory.join("manifest.jsonl");
    manifest.write(&path).map_err(py_err)?;
    Ok(path)
}

#[pymodule(name = "prosody_probe")]
pub fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProsodyTrack>()?;
    m.add_class::<PyLayerFeatureStack>()?;
    m.add_class::<PyLayerWeights>()?;
    m.add_class::<PyTrainedProbe>()?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(extract_pitch, m)?)?;
    m.add_function(wrap_pyfunction!(extract_energy, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(masked_mse, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_frames, m)?)?;
    m.add_function(wrap_pyfunction!(layer_contribution, m)?)?;
    m.add_function(wrap_pyfunction!(run_task, m)?)?;
    m.add_function(wrap_pyfunction!(read_results, m)?)?;
    m.add_function(wrap_pyfunction!(write_glide_corpus, m)?)?;
    m.add("LEARNING_RATES", probe::LEARNING_RATES.to_vec())?;
    Ok(())
}
