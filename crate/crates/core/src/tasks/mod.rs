//! Task runners binding manifests, targets, upstreams and probes.

mod features;
mod horizon;
mod metrics;
mod result;
pub mod rnn;
mod runners;

pub use features::{FeatureProvider, Provenance, TRACK_HOP_MS};
pub use horizon::{HorizonSpec, HORIZONS_MS};
pub use metrics::{compute_masked_mse, compute_metric, MetricKind};
pub use result::{timestamp_now, FingerprintInputs, ResultsStore, TaskResult};
pub use rnn::{evaluate_baseline, rnn_baseline_train, RnnConfig, TrainedBaseline, RNN_HIDDEN};
pub use runners::{
    run_classification_task, run_crosslingual, run_fvp, run_fvp_baseline, run_pror, score, BaselineRun,
    ClassificationTask, RunOptions, TaskRun, TaskSpec, BASELINE_NAME, DEFAULT_FOLDS,
};
