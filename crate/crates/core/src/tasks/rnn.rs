//! FBANK + unidirectional RNN baseline for future value prediction.

use ndarray::{Array1, Array2, Array3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{Adam, AdamConfig, FrameExample, LossPoint, RegressionSet, DEFAULT_BATCH_SIZE, DEFAULT_TRAIN_STEPS};
use crate::upstream::LayerFeatureStack;

pub const RNN_HIDDEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub train_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: AdamConfig,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden: RNN_HIDDEN,
            learning_rate: 1e-3,
            train_steps: DEFAULT_TRAIN_STEPS,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
            optimizer: AdamConfig::default(),
        }
    }
}

/// h_t = tanh(W_in x̂_t + W_rec h_{t-1} + b), ŷ_t = v·h_t + c, with x̂ the
/// input standardized by training-set statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedBaseline {
    pub config: RnnConfig,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub w_in: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub bias: Array1<f64>,
    pub readout: Array1<f64>,
    pub readout_bias: f64,
    pub train_log: Vec<LossPoint>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RnnLayout {
    pub hidden: usize,
    pub input: usize,
}

impl RnnLayout {
    fn w_in(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.input
    }
    fn w_rec(&self) -> std::ops::Range<usize> {
        let s = self.hidden * self.input;
        s..s + self.hidden * self.hidden
    }
    fn bias(&self) -> std::ops::Range<usize> {
        let s = self.w_rec().end;
        s..s + self.hidden
    }
    fn readout(&self) -> std::ops::Range<usize> {
        let s = self.bias().end;
        s..s + self.hidden
    }
    fn readout_bias(&self) -> usize {
        self.readout().end
    }
    pub fn len(&self) -> usize {
        self.readout_bias() + 1
    }
}

/// Hidden states for every frame, flattened (n, H).
fn forward(layout: RnnLayout, params: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    let (h_dim, d) = (layout.hidden, layout.input);
    let w_in = &params[layout.w_in()];
    let w_rec = &params[layout.w_rec()];
    let b = &params[layout.bias()];
    let mut hs = vec![0.0; n * h_dim];
    for t in 0..n {
        let xt = &x[t * d..(t + 1) * d];
        for j in 0..h_dim {
            let mut a = b[j];
            let row = &w_in[j * d..(j + 1) * d];
            a += row.iter().zip(xt).map(|(w, v)| w * v).sum::<f64>();
            if t > 0 {
                let prev = &hs[(t - 1) * h_dim..t * h_dim];
                let rrow = &w_rec[j * h_dim..(j + 1) * h_dim];
                a += rrow.iter().zip(prev).map(|(w, v)| w * v).sum::<f64>();
            }
            hs[t * h_dim + j] = a.tanh();
        }
    }
    hs
}

fn readout(layout: RnnLayout, params: &[f64], hs: &[f64], n: usize) -> Vec<f64> {
    let v = &params[layout.readout()];
    let c = params[layout.readout_bias()];
    (0..n)
        .map(|t| c + v.iter().zip(&hs[t * layout.hidden..(t + 1) * layout.hidden]).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Masked MSE of one utterance and its gradient (accumulated into `grad`, scaled by `scale`).
pub(crate) fn sequence_loss_and_grad(
    layout: RnnLayout,
    params: &[f64],
    x: &[f64],
    targets: &[f32],
    voiced: &[bool],
    scale: f64,
    grad: &mut [f64],
) -> Option<f64> {
    let n = targets.len();
    let m = voiced.iter().filter(|&&v| v).count();
    if m == 0 {
        return None;
    }
    let (h_dim, d) = (layout.hidden, layout.input);
    let hs = forward(layout, params, x, n);
    let pred = readout(layout, params, &hs, n);
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let last = voiced.iter().rposition(|&v| v).expect("m > 0");
    let w_rec = &params[layout.w_rec()];
    let v = &params[layout.readout()];
    let mut carry = vec![0.0; h_dim];
    let mut da = vec![0.0; h_dim];
    for t in (0..=last).rev() {
        let e = if voiced[t] {
            let err = pred[t] - targets[t] as f64;
            loss += err * err * inv_m;
            2.0 * err * inv_m * scale
        } else {
            0.0
        };
        let ht = &hs[t * h_dim..(t + 1) * h_dim];
        grad[layout.readout_bias()] += e;
        for j in 0..h_dim {
            grad[layout.readout().start + j] += e * ht[j];
            let dh = e * v[j] + carry[j];
            da[j] = dh * (1.0 - ht[j] * ht[j]);
            grad[layout.bias().start + j] += da[j];
        }
        let xt = &x[t * d..(t + 1) * d];
        let w_in_start = layout.w_in().start;
        for j in 0..h_dim {
            if da[j] == 0.0 {
                continue;
            }
            let g = &mut grad[w_in_start + j * d..w_in_start + (j + 1) * d];
            for (gk, xk) in g.iter_mut().zip(xt) {
                *gk += da[j] * xk;
            }
        }
        if t > 0 {
            let prev = &hs[(t - 1) * h_dim..t * h_dim];
            let w_rec_start = layout.w_rec().start;
            for j in 0..h_dim {
                let g = &mut grad[w_rec_start + j * h_dim..w_rec_start + (j + 1) * h_dim];
                for (gk, hk) in g.iter_mut().zip(prev) {
                    *gk += da[j] * hk;
                }
            }
            for k in 0..h_dim {
                carry[k] = (0..h_dim).map(|j| w_rec[j * h_dim + k] * da[j]).sum();
            }
        }
    }
    Some(loss)
}

fn standardized(stack: &LayerFeatureStack, mean: &[f64], scale: &[f64], n: usize) -> Vec<f64> {
    let layer = stack.layer(0);
    let mut out = Vec::with_capacity(n * mean.len());
    for frame in layer.outer_iter().take(n) {
        out.extend(frame.iter().zip(mean).zip(scale).map(|((&x, m), s)| (x as f64 - m) * s));
    }
    out
}

fn input_statistics(set: &RegressionSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = set.dim();
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    let mut n = 0usize;
    for ex in &set.examples {
        let stack = ex.stack()?;
        for frame in stack.layer(0).outer_iter() {
            for (k, &x) in frame.iter().enumerate() {
                sum[k] += x as f64;
                sq[k] += (x as f64) * (x as f64);
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("baseline training frames"));
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    let scale = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / n as f64 - m * m).max(0.0);
            if var > 1e-12 {
                1.0 / var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    Ok((mean, scale))
}

/// Trains the recurrent baseline on single-layer (FBANK) frame examples.
pub fn rnn_baseline_train(train: &RegressionSet, config: &RnnConfig) -> Result<TrainedBaseline> {
    if train.num_layers() != 1 {
        return Err(Error::Shape(format!(
            "baseline expects single-layer features, got {} layers",
            train.num_layers()
        )));
    }
    if config.hidden == 0 || config.train_steps == 0 || config.batch_size == 0 {
        return Err(Error::Config("hidden size, steps and batch size must be positive".into()));
    }
    if train.num_voiced() == 0 {
        return Err(Error::NoVoicedFrames("training set"));
    }
    let layout = RnnLayout {
        hidden: config.hidden,
        input: train.dim(),
    };
    let (mean, scale) = input_statistics(train)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / (config.hidden as f64).sqrt();
    let mut params: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-bound..bound)).collect();
    let mut grad = vec![0.0; layout.len()];
    let mut adam = Adam::new(config.optimizer, config.learning_rate, layout.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let batch_size = config.batch_size.min(train.len());
    let log_every = (config.train_steps / 200).max(1);
    let mut log = Vec::new();
    let inputs: Vec<Vec<f64>> = train
        .examples
        .iter()
        .map(|ex| Ok(standardized(&*ex.stack()?, &mean, &scale, ex.num_scored_frames())))
        .collect::<Result<_>>()?;

    for step in 1..=config.train_steps {
        let mut batch = Vec::with_capacity(batch_size);
        while batch.len() < batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        let contributing: Vec<usize> = batch
            .into_iter()
            .filter(|&i| train.examples[i].num_voiced() > 0)
            .collect();
        if contributing.is_empty() {
            continue;
        }
        let s = 1.0 / contributing.len() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in &contributing {
            let ex: &FrameExample = &train.examples[i];
            loss += s * sequence_loss_and_grad(layout, &params, &inputs[i], &ex.targets, &ex.voiced, s, &mut grad)
                .expect("contributing example");
        }
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        adam.step(&mut params, &grad);
        if step % log_every == 0 || step == config.train_steps {
            log.push(LossPoint { step, loss });
        }
    }

    let h = layout.hidden;
    Ok(TrainedBaseline {
        config: config.clone(),
        input_mean: mean,
        input_scale: scale,
        w_in: Array2::from_shape_vec((h, layout.input), params[layout.w_in()].to_vec()).expect("shape"),
        w_rec: Array2::from_shape_vec((h, h), params[layout.w_rec()].to_vec()).expect("shape"),
        bias: Array1::from(params[layout.bias()].to_vec()),
        readout: Array1::from(params[layout.readout()].to_vec()),
        readout_bias: params[layout.readout_bias()],
        train_log: log,
    })
}

impl TrainedBaseline {
    fn layout(&self) -> RnnLayout {
        RnnLayout {
            hidden: self.w_in.nrows(),
            input: self.w_in.ncols(),
        }
    }

    fn flat_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.w_in.iter().copied().collect();
        p.extend(self.w_rec.iter());
        p.extend(self.bias.iter());
        p.extend(self.readout.iter());
        p.push(self.readout_bias);
        p
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.train_log.last().map(|p| p.loss)
    }

    /// Prediction at every frame; frame `t` depends on frames `0..=t` only.
    pub fn predict(&self, stack: &LayerFeatureStack) -> Result<Vec<f64>> {
        if stack.num_layers() != 1 || stack.dim() != self.w_in.ncols() {
            return Err(Error::Shape(format!(
                "baseline expects 1 × {} features, got {} × {}",
                self.w_in.ncols(),
                stack.num_layers(),
                stack.dim()
            )));
        }
        let n = stack.num_frames();
        let layout = self.layout();
        let params = self.flat_params();
        let x = standardized(stack, &self.input_mean, &self.input_scale, n);
        let hs = forward(layout, &params, &x, n);
        Ok(readout(layout, &params, &hs, n))
    }

    /// Predictions shaped (1, T, 1) for the perturbation test.
    pub fn predict_array(&self, stack: &LayerFeatureStack) -> Result<Array3<f32>> {
        let pred = self.predict(stack)?;
        let n = pred.len();
        Ok(Array3::from_shape_vec((1, n, 1), pred.into_iter().map(|v| v as f32).collect()).expect("shape"))
    }

    pub fn num_parameters(&self) -> usize {
        self.layout().len()
    }
}

/// Voiced-frame MSE of the baseline over a set.
pub fn evaluate_baseline(model: &TrainedBaseline, set: &RegressionSet) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for ex in &set.examples {
        if ex.num_voiced() == 0 {
            continue;
        }
        let pred = model.predict(&*ex.stack()?)?;
        for ((p, &y), &v) in pred.iter().zip(&ex.targets).zip(&ex.voiced) {
            if v {
                sum += (p - y as f64) * (p - y as f64);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoVoicedFrames("evaluation set"));
    }
    Ok(sum / n as f64)
}
