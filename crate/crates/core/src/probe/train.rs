use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::probe::model::probe_fingerprint;
use crate::probe::weights::{normalization_backward, normalize};
use crate::probe::{
    Adam, ClassificationSet, FrameExample, LayerWeights, LinearHead, LossPoint, Normalization,
    PooledExample, ProbeConfig, RegressionSet, TrainedProbe, TrainingSet,
};

/// Flat parameter vector: [raw layer weights | head weight (D×C, row-major) | bias (C)].
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub layers: usize,
    pub dim: usize,
    pub out: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.layers + self.dim * self.out + self.out
    }

    fn head(&self) -> usize {
        self.layers
    }

    fn bias(&self) -> usize {
        self.layers + self.dim * self.out
    }
}

/// Batch loss and gradient w.r.t. the flat parameters. `None` when no example
/// in the batch contributes (all-unvoiced regression batch).
pub(crate) fn batch_loss_and_grad(
    data: &TrainingSet,
    batch: &[usize],
    layout: Layout,
    params: &[f64],
    normalization: Normalization,
    grad: &mut [f64],
) -> Result<Option<f64>> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let alpha = normalize(&params[..layout.layers], normalization);
    let mut grad_alpha = vec![0.0; layout.layers];
    let mut total = 0.0;
    let mut count = 0usize;
    for &i in batch {
        let loss = match data {
            TrainingSet::Classification(set) => Some(classification_example(
                &set.examples[i],
                layout,
                params,
                &alpha,
                grad,
                &mut grad_alpha,
            )),
            TrainingSet::Regression(set) => {
                regression_example(&set.examples[i], layout, params, &alpha, grad, &mut grad_alpha)?
            }
        };
        if let Some(l) = loss {
            total += l;
            count += 1;
        }
    }
    if count == 0 {
        return Ok(None);
    }
    let scale = 1.0 / count as f64;
    let grad_raw = normalization_backward(&alpha, &grad_alpha, normalization);
    grad[..layout.layers].copy_from_slice(&grad_raw);
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok(Some(total * scale))
}

fn classification_example(
    ex: &PooledExample,
    layout: Layout,
    params: &[f64],
    alpha: &[f64],
    grad: &mut [f64],
    grad_alpha: &mut [f64],
) -> f64 {
    let (d, c) = (layout.dim, layout.out);
    let w = &params[layout.head()..layout.bias()];
    let b = &params[layout.bias()..];
    let mut pooled = vec![0.0; d];
    for (i, row) in ex.layer_means.outer_iter().enumerate() {
        for (p, &x) in pooled.iter_mut().zip(row.iter()) {
            *p += alpha[i] * x;
        }
    }
    let mut logits = b.to_vec();
    for (k, &p) in pooled.iter().enumerate() {
        for (j, l) in logits.iter_mut().enumerate() {
            *l += p * w[k * c + j];
        }
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() + max - logits[ex.label];
    let g: Vec<f64> = exps
        .iter()
        .enumerate()
        .map(|(j, e)| e / z - if j == ex.label { 1.0 } else { 0.0 })
        .collect();
    let (head_grad, bias_grad) = grad[layout.head()..].split_at_mut(d * c);
    let mut grad_pooled = vec![0.0; d];
    for k in 0..d {
        for j in 0..c {
            head_grad[k * c + j] += pooled[k] * g[j];
            grad_pooled[k] += w[k * c + j] * g[j];
        }
    }
    for (bg, gj) in bias_grad.iter_mut().zip(&g) {
        *bg += gj;
    }
    for (i, row) in ex.layer_means.outer_iter().enumerate() {
        grad_alpha[i] += row.iter().zip(&grad_pooled).map(|(x, gp)| x * gp).sum::<f64>();
    }
    loss
}

fn regression_example(
    ex: &FrameExample,
    layout: Layout,
    params: &[f64],
    alpha: &[f64],
    grad: &mut [f64],
    grad_alpha: &mut [f64],
) -> Result<Option<f64>> {
    let m = ex.num_voiced();
    if m == 0 {
        return Ok(None);
    }
    let stack = ex.stack()?;
    let layers = stack.layers.as_standard_layout();
    let data = layers.as_slice().expect("standard layout");
    let (d, frames) = (layout.dim, stack.num_frames());
    let w = &params[layout.head()..layout.bias()];
    let b = params[layout.bias()];
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut z = vec![0.0; layout.layers];
    let mut grad_head = vec![0.0; d];
    let mut grad_b = 0.0;
    for (t, (&target, _)) in ex.targets.iter().zip(&ex.voiced).enumerate().filter(|(_, (_, &v))| v) {
        for (i, zi) in z.iter_mut().enumerate() {
            let frame = &data[(i * frames + t) * d..(i * frames + t + 1) * d];
            *zi = frame.iter().zip(w).map(|(&x, &wk)| x as f64 * wk).sum();
        }
        let pred = b + alpha.iter().zip(&z).map(|(a, zi)| a * zi).sum::<f64>();
        let err = pred - target as f64;
        loss += err * err * inv_m;
        let e = 2.0 * err * inv_m;
        grad_b += e;
        for (ga, zi) in grad_alpha.iter_mut().zip(&z) {
            *ga += e * zi;
        }
        for (i, &a) in alpha.iter().enumerate() {
            let frame = &data[(i * frames + t) * d..(i * frames + t + 1) * d];
            let s = e * a;
            for (g, &x) in grad_head.iter_mut().zip(frame) {
                *g += s * x as f64;
            }
        }
    }
    grad[layout.bias()] += grad_b;
    for (g, a) in grad[layout.head()..layout.bias()].iter_mut().zip(&grad_head) {
        *g += a;
    }
    Ok(Some(loss))
}

/// Trains layer weights and head with Adam for a fixed number of steps and
/// returns the final-step parameters.
pub fn train_probe(task: &str, data: &TrainingSet, config: &ProbeConfig) -> Result<TrainedProbe> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if let TrainingSet::Regression(set) = data {
        if set.num_voiced() == 0 {
            return Err(Error::NoVoicedFrames("training set"));
        }
    }
    let layout = Layout {
        layers: data.num_layers(),
        dim: data.dim(),
        out: data.output_dim(),
    };
    let mut params = vec![0.0; layout.len()];
    params[..layout.layers]
        .copy_from_slice(&LayerWeights::uniform(layout.layers, config.normalization).raw);
    let mut grad = vec![0.0; layout.len()];
    let mut adam = Adam::new(config.optimizer, config.learning_rate, layout.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let batch_size = config.batch_size.min(data.len());
    let log_every = (config.train_steps / 200).max(1);
    let mut log = Vec::new();
    let mut batch = Vec::with_capacity(batch_size);

    for step in 1..=config.train_steps {
        batch.clear();
        while batch.len() < batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        let Some(loss) =
            batch_loss_and_grad(data, &batch, layout, &params, config.normalization, &mut grad)?
        else {
            continue;
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        adam.step(&mut params, &grad);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        if step % log_every == 0 || step == config.train_steps {
            log.push(LossPoint { step, loss });
        }
    }

    let mut head = LinearHead::zeros(layout.dim, layout.out);
    head.weight
        .as_slice_mut()
        .expect("standard layout")
        .copy_from_slice(&params[layout.head()..layout.bias()]);
    head.bias
        .as_slice_mut()
        .expect("standard layout")
        .copy_from_slice(&params[layout.bias()..]);
    Ok(TrainedProbe {
        task: task.to_string(),
        layer_weights: LayerWeights::from_raw(params[..layout.layers].to_vec(), config.normalization),
        head,
        config: config.clone(),
        train_log: log,
        fingerprint: probe_fingerprint(task, config, layout.layers, layout.dim, layout.out),
    })
}

pub fn predict_classes(probe: &TrainedProbe, set: &ClassificationSet) -> Result<Vec<usize>> {
    set.examples
        .iter()
        .map(|e| probe.classify(e.layer_means.view()))
        .collect()
}

/// Squared-error sum and voiced-frame count over a regression set.
pub fn regression_errors(probe: &TrainedProbe, set: &RegressionSet) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut n = 0;
    for ex in &set.examples {
        if ex.num_voiced() == 0 {
            continue;
        }
        let stack = ex.stack()?;
        let pred = probe.predict_frames(&stack)?;
        for ((p, &y), &v) in pred.iter().zip(&ex.targets).zip(&ex.voiced) {
            if v {
                let e = p - y as f64;
                sum += e * e;
                n += 1;
            }
        }
    }
    Ok((sum, n))
}

/// MSE over all voiced frames of the set.
pub fn evaluate_regression(probe: &TrainedProbe, set: &RegressionSet) -> Result<f64> {
    let (sum, n) = regression_errors(probe, set)?;
    if n == 0 {
        return Err(Error::NoVoicedFrames("evaluation set"));
    }
    Ok(sum / n as f64)
}
