use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Task;
use crate::error::{Error, IoContext, Result};
use crate::probe::{AdamConfig, LayerWeights, Normalization, LEARNING_RATES};
use crate::upstream::LayerFeatureStack;

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const SARD_TRAIN_STEPS: usize = 3000;
pub const DEFAULT_TRAIN_STEPS: usize = 50000;

pub fn train_steps_for(task: Task) -> usize {
    match task {
        Task::Sarcasm => SARD_TRAIN_STEPS,
        _ => DEFAULT_TRAIN_STEPS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub train_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: AdamConfig,
    pub normalization: Normalization,
    /// Prediction horizon in seconds (FVP only).
    pub horizon_s: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            learning_rate: 1e-3,
            train_steps: DEFAULT_TRAIN_STEPS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
            optimizer: AdamConfig::default(),
            normalization: Normalization::Softmax,
            horizon_s: None,
        }
    }
}

impl ProbeConfig {
    pub fn for_task(task: Task) -> Self {
        ProbeConfig {
            train_steps: train_steps_for(task),
            ..ProbeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !LEARNING_RATES.contains(&self.learning_rate) {
            return Err(Error::Config(format!(
                "learning rate {} is not one of {LEARNING_RATES:?}",
                self.learning_rate
            )));
        }
        if self.train_steps == 0 {
            return Err(Error::Config("train_steps must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializable")))
    }
}

/// Linear map from the aggregated D-vector to C outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    /// Shape (D, C).
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearHead {
    pub fn zeros(input_dim: usize, output_dim: usize) -> Self {
        LinearHead {
            weight: Array2::zeros((input_dim, output_dim)),
            bias: Array1::zeros(output_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn num_parameters(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedProbe {
    pub task: String,
    pub layer_weights: LayerWeights,
    pub head: LinearHead,
    pub config: ProbeConfig,
    pub train_log: Vec<LossPoint>,
    pub fingerprint: String,
}

impl TrainedProbe {
    pub fn num_layers(&self) -> usize {
        self.layer_weights.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.train_log.last().map(|p| p.loss)
    }

    /// Class scores for an utterance given its per-layer time means (L × D).
    pub fn logits(&self, layer_means: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_layout(layer_means.nrows(), layer_means.ncols())?;
        let w = self.layer_weights.normalized();
        let mut pooled = Array1::<f64>::zeros(layer_means.ncols());
        for (i, row) in layer_means.outer_iter().enumerate() {
            pooled.scaled_add(w[i], &row);
        }
        Ok(pooled.dot(&self.head.weight) + &self.head.bias)
    }

    pub fn classify(&self, layer_means: ArrayView2<'_, f64>) -> Result<usize> {
        let logits = self.logits(layer_means)?;
        Ok(argmax(logits.as_slice().expect("contiguous")))
    }

    /// Frame-wise regression output for every frame of the stack.
    pub fn predict_frames(&self, stack: &LayerFeatureStack) -> Result<Vec<f64>> {
        self.check_layout(stack.num_layers(), stack.dim())?;
        let w = self.layer_weights.normalized();
        let head = self.head.weight.column(0);
        let bias = self.head.bias[0];
        let mut out = vec![bias; stack.num_frames()];
        for (i, layer) in stack.layers.outer_iter().enumerate() {
            for (t, frame) in layer.outer_iter().enumerate() {
                let z: f64 = frame.iter().zip(head.iter()).map(|(&x, &h)| x as f64 * h).sum();
                out[t] += w[i] * z;
            }
        }
        Ok(out)
    }

    fn check_layout(&self, layers: usize, dim: usize) -> Result<()> {
        if layers != self.num_layers() || dim != self.head.input_dim() {
            return Err(Error::Shape(format!(
                "probe expects {} × {} input, got {layers} × {dim}",
                self.num_layers(),
                self.head.input_dim()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).at(parent)?;
        }
        fs::write(path, serde_json::to_vec_pretty(self)?).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).at(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

pub(crate) fn probe_fingerprint(task: &str, config: &ProbeConfig, layers: usize, dim: usize, out: usize) -> String {
    let mut h = Sha256::new();
    h.update(task.as_bytes());
    h.update([0]);
    h.update(config.fingerprint().as_bytes());
    h.update(format!("{layers}x{dim}x{out}").as_bytes());
    hex::encode(h.finalize())
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
