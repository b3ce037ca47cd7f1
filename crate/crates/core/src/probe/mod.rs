//! Trainable downstream probe: weighted layer sum, linear head, losses,
//! training loop and learning-rate sweep.

mod dataset;
mod model;
mod ops;
mod optim;
mod sweep;
mod train;
mod weights;

pub use dataset::{
    mean_layer_norms, ClassificationSet, FeatureSource, FrameExample, PooledExample,
    RegressionSet, TrainingSet,
};
pub use model::{
    argmax, train_steps_for, LinearHead, LossPoint, ProbeConfig, TrainedProbe,
    DEFAULT_BATCH_SIZE, DEFAULT_TRAIN_STEPS, SARD_TRAIN_STEPS,
};
pub use ops::{aggregate, batch_masked_mse, masked_mse, masked_mse_slices, mean_pool, MaskedLoss};
pub use optim::{Adam, AdamConfig};
pub use sweep::{lr_sweep, select_best, sweep_table_tsv, EvalSplit, SweepOutcome, SweepRow, LEARNING_RATES};
pub use train::{evaluate_regression, predict_classes, regression_errors, train_probe};
pub use weights::{LayerWeights, Normalization};

/// Gradient of the mean batch loss w.r.t. the raw layer weights, evaluated at
/// the given raw weights with a fixed head. Exposed for gradient checking.
pub fn raw_weight_gradient(
    data: &TrainingSet,
    raw: &[f64],
    head: &LinearHead,
    normalization: Normalization,
) -> crate::Result<(f64, Vec<f64>)> {
    let layout = train::Layout {
        layers: data.num_layers(),
        dim: data.dim(),
        out: data.output_dim(),
    };
    if raw.len() != layout.layers || head.input_dim() != layout.dim || head.output_dim() != layout.out {
        return Err(crate::Error::Shape("parameter layout does not match data".into()));
    }
    let mut params = raw.to_vec();
    params.extend(head.weight.iter());
    params.extend(head.bias.iter());
    let mut grad = vec![0.0; layout.len()];
    let batch: Vec<usize> = (0..data.len()).collect();
    let loss = train::batch_loss_and_grad(data, &batch, layout, &params, normalization, &mut grad)?
        .ok_or(crate::Error::NoVoicedFrames("gradient batch"))?;
    grad.truncate(layout.layers);
    Ok((loss, grad))
}
