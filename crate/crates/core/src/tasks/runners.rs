use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{
    bin_sentiment_label, make_folds, BinnedLabel, DatasetManifest, FeatureCache, SentimentScheme,
    Split, SplitName, Task, UtteranceRecord,
};
use crate::error::{Error, Result};
use crate::probe::{
    lr_sweep, predict_classes, evaluate_regression, train_probe, ClassificationSet, EvalSplit, FrameExample,
    PooledExample, ProbeConfig, RegressionSet, SweepRow, TrainedProbe, TrainingSet, LEARNING_RATES,
};
use crate::prosody::ProsodyKind;
use crate::tasks::rnn::{evaluate_baseline, rnn_baseline_train, RnnConfig, TrainedBaseline};
use crate::tasks::{
    compute_metric, timestamp_now, FeatureProvider, FingerprintInputs, HorizonSpec, MetricKind, TaskResult,
};
use crate::upstream::{Fbank, Mode, Upstream};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassificationTask {
    Sentiment2,
    Sentiment7,
    Sarcasm,
    Persuasiveness,
}

impl ClassificationTask {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassificationTask::Sentiment2 => "SA-2",
            ClassificationTask::Sentiment7 => "SA-7",
            ClassificationTask::Sarcasm => "SarD",
            ClassificationTask::Persuasiveness => "PP",
        }
    }

    pub fn metric(self) -> MetricKind {
        match self {
            ClassificationTask::Sarcasm => MetricKind::F1,
            _ => MetricKind::Accuracy,
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            ClassificationTask::Sentiment7 => 7,
            _ => 2,
        }
    }

    pub fn manifest_task(self) -> Task {
        match self {
            ClassificationTask::Sentiment2 | ClassificationTask::Sentiment7 => Task::Sentiment,
            ClassificationTask::Sarcasm => Task::Sarcasm,
            ClassificationTask::Persuasiveness => Task::Persuasiveness,
        }
    }

    fn label(self, record: &UtteranceRecord) -> Result<Option<usize>> {
        let score = record.label.ok_or_else(|| Error::InvalidRecord {
            id: record.id.clone(),
            message: "missing label".into(),
        })?;
        let scheme = match self {
            ClassificationTask::Sentiment2 => SentimentScheme::Binary,
            ClassificationTask::Sentiment7 => SentimentScheme::Seven,
            _ => return Ok(Some(score as usize)),
        };
        Ok(match bin_sentiment_label(score, scheme)? {
            BinnedLabel::Class(c) => Some(c),
            BinnedLabel::Excluded => None,
        })
    }
}

impl fmt::Display for ClassificationTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassificationTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ClassificationTask::Sentiment2,
            ClassificationTask::Sentiment7,
            ClassificationTask::Sarcasm,
            ClassificationTask::Persuasiveness,
        ]
        .into_iter()
        .find(|t| t.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::Config(format!("unknown classification task `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub probe: ProbeConfig,
    pub lr_sweep: bool,
    /// Concatenate these layers instead of the weighted sum (integration mode).
    pub layer_selection: Option<Vec<usize>>,
    pub folds: usize,
}

impl RunOptions {
    pub fn new(probe: ProbeConfig) -> Self {
        RunOptions {
            probe,
            lr_sweep: true,
            layer_selection: None,
            folds: DEFAULT_FOLDS,
        }
    }
}

/// Everything a task run produces.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub result: TaskResult,
    /// One probe per fold (a single one without cross-validation).
    pub probes: Vec<TrainedProbe>,
    /// Sweep tables aligned with `probes`; empty without a sweep.
    pub sweeps: Vec<Vec<SweepRow>>,
    /// Test data aligned with `probes`.
    pub test_sets: Vec<TrainingSet>,
}

/// Verifies the upstream's parameters are untouched by a run.
struct FrozenGuard<'a> {
    upstream: &'a dyn Upstream,
    checksum: String,
}

impl<'a> FrozenGuard<'a> {
    fn new(upstream: &'a dyn Upstream) -> Self {
        FrozenGuard {
            upstream,
            checksum: upstream.parameter_checksum(),
        }
    }

    fn verify(&self) -> Result<()> {
        if self.upstream.parameter_checksum() != self.checksum {
            return Err(Error::Upstream {
                upstream: self.upstream.spec().name.clone(),
                message: "parameters changed during a probe run".into(),
            });
        }
        Ok(())
    }
}

/// Task metric of a probe on a data set.
pub fn score(probe: &TrainedProbe, set: &TrainingSet, metric: MetricKind) -> Result<f64> {
    match set {
        TrainingSet::Classification(s) => {
            let preds: Vec<f64> = predict_classes(probe, s)?.into_iter().map(|c| c as f64).collect();
            let refs: Vec<f64> = s.labels().into_iter().map(|c| c as f64).collect();
            compute_metric(&preds, &refs, metric)
        }
        TrainingSet::Regression(s) => evaluate_regression(probe, s),
    }
}

struct Fitted {
    probe: TrainedProbe,
    test_metric: f64,
    sweep: Option<Vec<SweepRow>>,
}

fn fit_and_score(
    task: &str,
    train: &TrainingSet,
    dev: Option<&TrainingSet>,
    test: &TrainingSet,
    metric: MetricKind,
    opts: &RunOptions,
) -> Result<Fitted> {
    if opts.lr_sweep {
        let dev = dev.ok_or(Error::MissingSplit("dev"))?;
        let outcome = lr_sweep(task, train, &opts.probe, metric.higher_is_better(), |p, split| match split {
            EvalSplit::Dev => score(p, dev, metric),
            EvalSplit::Test => score(p, test, metric),
        })?;
        let test_metric = outcome.best_row().test_metric;
        Ok(Fitted {
            probe: outcome.best,
            test_metric,
            sweep: Some(outcome.rows),
        })
    } else {
        let probe = train_probe(task, train, &opts.probe)?;
        let test_metric = score(&probe, test, metric)?;
        Ok(Fitted {
            probe,
            test_metric,
            sweep: None,
        })
    }
}

fn select(set: TrainingSet, selection: &Option<Vec<usize>>) -> Result<TrainingSet> {
    match (selection, set) {
        (None, set) => Ok(set),
        (Some(sel), TrainingSet::Classification(s)) => Ok(TrainingSet::Classification(s.select_layers(sel)?)),
        (Some(sel), TrainingSet::Regression(s)) => Ok(TrainingSet::Regression(s.select_layers(sel)?)),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_result(
    task: &str,
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    metric: MetricKind,
    value: f64,
    opts: &RunOptions,
    selected_lr: f64,
    extra: ResultExtras,
) -> TaskResult {
    let probe_config = opts.probe.fingerprint();
    let checksum = upstream.parameter_checksum();
    let data_hash = manifest.data_hash();
    let fingerprint = FingerprintInputs {
        upstream: &extra.upstream_name.clone().unwrap_or_else(|| upstream.spec().name.clone()),
        upstream_checksum: &checksum,
        task,
        probe_config: &probe_config,
        lr_sweep: opts.lr_sweep,
        seed: opts.probe.seed,
        data_hash: &data_hash,
        feature: extra.feature,
        horizon_ms: extra.horizon.map(|h| h.horizon_ms),
        layers: opts.layer_selection.as_deref(),
    }
    .digest();
    TaskResult {
        task: task.to_string(),
        upstream: extra.upstream_name.unwrap_or_else(|| upstream.spec().name.clone()),
        metric_name: metric,
        value,
        per_fold: extra.per_fold,
        horizon: extra.horizon.map(|h| h.seconds()),
        feature: extra.feature,
        language: extra.language,
        layers: opts.layer_selection.clone(),
        learning_rate: selected_lr,
        seed: opts.probe.seed,
        config_fingerprint: fingerprint,
        timestamp: timestamp_now(),
    }
}

#[derive(Default)]
struct ResultExtras {
    upstream_name: Option<String>,
    per_fold: Option<Vec<f64>>,
    feature: Option<ProsodyKind>,
    horizon: Option<HorizonSpec>,
    language: Option<String>,
}

fn check_classes(set: &ClassificationSet) -> Result<()> {
    let mut counts = vec![0usize; set.num_classes];
    for ex in &set.examples {
        counts[ex.label] += 1;
    }
    match counts.iter().position(|&c| c == 0) {
        Some(c) => Err(Error::EmptyClass(c)),
        None => Ok(()),
    }
}

/// Utterance classification (SA-2, SA-7, SarD, PP). SarD is scored by mean
/// F1 over cross-validation folds: each fold is the test set once, the next
/// fold is the dev set when sweeping, and the rest is training data.
pub fn run_classification_task(
    task: ClassificationTask,
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    cache: Option<FeatureCache>,
    opts: &RunOptions,
) -> Result<TaskRun> {
    if manifest.task != task.manifest_task() {
        return Err(Error::Config(format!(
            "manifest `{}` is for {}, not {}",
            manifest.name, manifest.task, task
        )));
    }
    let guard = FrozenGuard::new(upstream);
    let provider = FeatureProvider::new(upstream, Mode::Full, cache);
    let mut pooled: Vec<(usize, PooledExample)> = Vec::new();
    for (i, record) in manifest.records.iter().enumerate() {
        let Some(label) = task.label(record)? else { continue };
        if label >= task.num_classes() {
            return Err(Error::InvalidRecord {
                id: record.id.clone(),
                message: format!("label {label} outside {} classes", task.num_classes()),
            });
        }
        let (stack, _) = provider.features(record)?;
        pooled.push((i, PooledExample::from_stack(&stack, label)?));
    }
    let make_set = |pred: &dyn Fn(usize) -> bool| -> Result<Option<TrainingSet>> {
        let examples: Vec<PooledExample> = pooled
            .iter()
            .filter(|(i, _)| pred(*i))
            .map(|(_, e)| e.clone())
            .collect();
        if examples.is_empty() {
            return Ok(None);
        }
        let set = ClassificationSet::new(examples, task.num_classes())?;
        select(TrainingSet::Classification(set), &opts.layer_selection).map(Some)
    };
    let metric = task.metric();
    let name = task.as_str();

    let (value, per_fold, fits, test_sets) = if task == ClassificationTask::Sarcasm {
        let folds = record_folds(manifest, opts)?;
        let k = folds.values().copied().max().map_or(0, |m| m + 1);
        if k < 2 {
            return Err(Error::InvalidFolds { k, records: manifest.len() });
        }
        let mut fold_scores = Vec::with_capacity(k);
        let mut fits = Vec::with_capacity(k);
        let mut tests = Vec::with_capacity(k);
        for f in 0..k {
            let dev_fold = (f + 1) % k;
            let fold_of = |i: usize| folds[&i];
            let train = make_set(&|i| fold_of(i) != f && (!opts.lr_sweep || fold_of(i) != dev_fold))?
                .ok_or(Error::MissingSplit("train"))?;
            let dev = make_set(&|i| fold_of(i) == dev_fold)?;
            let test = make_set(&|i| fold_of(i) == f)?.ok_or(Error::MissingSplit("test"))?;
            if let TrainingSet::Classification(s) = &train {
                check_classes(s)?;
            }
            let fit = fit_and_score(name, &train, dev.as_ref(), &test, metric, opts)?;
            fold_scores.push(fit.test_metric);
            fits.push(fit);
            tests.push(test);
        }
        let mean = fold_scores.iter().sum::<f64>() / k as f64;
        (mean, Some(fold_scores), fits, tests)
    } else {
        let split_of = |i: usize| manifest.records[i].split;
        let named = |s: SplitName| move |i: usize| split_of(i) == Split::Named(s);
        let train = make_set(&named(SplitName::Train))?.ok_or(Error::MissingSplit("train"))?;
        let dev = make_set(&named(SplitName::Dev))?;
        let test = make_set(&named(SplitName::Test))?.ok_or(Error::MissingSplit("test"))?;
        if let TrainingSet::Classification(s) = &train {
            check_classes(s)?;
        }
        let fit = fit_and_score(name, &train, dev.as_ref(), &test, metric, opts)?;
        (fit.test_metric, None, vec![fit], vec![test])
    };
    guard.verify()?;
    let lr = fits[0].probe.config.learning_rate;
    let result = build_result(
        name,
        upstream,
        manifest,
        metric,
        value,
        opts,
        lr,
        ResultExtras {
            per_fold,
            ..ResultExtras::default()
        },
    );
    Ok(finish(result, fits, test_sets))
}

fn finish(result: TaskResult, fits: Vec<Fitted>, test_sets: Vec<TrainingSet>) -> TaskRun {
    let mut probes = Vec::with_capacity(fits.len());
    let mut sweeps = Vec::new();
    for fit in fits {
        probes.push(fit.probe);
        if let Some(rows) = fit.sweep {
            sweeps.push(rows);
        }
    }
    TaskRun {
        result,
        probes,
        sweeps,
        test_sets,
    }
}

/// Fold index per record: taken from the manifest when it carries folds,
/// otherwise drawn with the run seed.
fn record_folds(manifest: &DatasetManifest, opts: &RunOptions) -> Result<BTreeMap<usize, usize>> {
    let from_manifest: BTreeMap<usize, usize> = manifest
        .records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r.split {
            Split::Fold(k) => Some((i, k)),
            Split::Named(_) => None,
        })
        .collect();
    if from_manifest.len() == manifest.len() {
        return Ok(from_manifest);
    }
    if !from_manifest.is_empty() {
        return Err(Error::Config("manifest mixes fold and named splits".into()));
    }
    let assignment = make_folds(manifest, opts.folds, opts.probe.seed)?;
    Ok(manifest
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (i, assignment.fold_of(&r.id).expect("every record assigned")))
        .collect())
}

fn frame_set(
    provider: &FeatureProvider<'_>,
    records: &[&UtteranceRecord],
    feature: ProsodyKind,
    frame_offset: usize,
) -> Result<Option<RegressionSet>> {
    if records.is_empty() {
        return Ok(None);
    }
    let mut examples = Vec::with_capacity(records.len());
    for record in records {
        let (source, stack) = provider.source(record)?;
        let track = provider.aligned_track(record, feature, stack.num_frames())?;
        examples.push(FrameExample::new(
            record.id.clone(),
            source,
            stack.num_frames(),
            &track,
            frame_offset,
        )?);
    }
    let spec = provider.upstream().spec();
    RegressionSet::new(examples, spec.num_layers, spec.dim).map(Some)
}

struct FrameSplits {
    train: RegressionSet,
    dev: Option<RegressionSet>,
    test: RegressionSet,
}

fn frame_splits(
    provider: &FeatureProvider<'_>,
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    frame_offset: usize,
) -> Result<FrameSplits> {
    if manifest.is_empty() {
        return Err(Error::Empty("manifest"));
    }
    if !manifest.task.is_frame_level() {
        return Err(Error::Config(format!(
            "manifest `{}` is for {}, not a frame-level task",
            manifest.name, manifest.task
        )));
    }
    let split = |s| -> Vec<&UtteranceRecord> { manifest.split(s).collect() };
    let train = frame_set(provider, &split(SplitName::Train), feature, frame_offset)?
        .ok_or(Error::MissingSplit("train"))?;
    let dev = frame_set(provider, &split(SplitName::Dev), feature, frame_offset)?;
    let test = frame_set(provider, &split(SplitName::Test), feature, frame_offset)?
        .ok_or(Error::MissingSplit("test"))?;
    if test.num_voiced() == 0 {
        return Err(Error::NoVoicedFrames("test split"));
    }
    Ok(FrameSplits { train, dev, test })
}

#[allow(clippy::too_many_arguments)]
fn run_frame_task(
    task: &str,
    upstream: &dyn Upstream,
    mode: Mode,
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    horizon: Option<HorizonSpec>,
    language: Option<String>,
    cache: Option<FeatureCache>,
    opts: &RunOptions,
) -> Result<TaskRun> {
    let guard = FrozenGuard::new(upstream);
    let provider = FeatureProvider::new(upstream, mode, cache);
    let offset = horizon.map_or(0, |h| h.frame_offset);
    let splits = frame_splits(&provider, manifest, feature, offset)?;
    let train = select(TrainingSet::Regression(splits.train), &opts.layer_selection)?;
    let dev = splits
        .dev
        .map(|d| select(TrainingSet::Regression(d), &opts.layer_selection))
        .transpose()?;
    let test = select(TrainingSet::Regression(splits.test), &opts.layer_selection)?;
    let mut probe_opts = opts.clone();
    probe_opts.probe.horizon_s = horizon.map(|h| h.seconds());
    let fit = fit_and_score(task, &train, dev.as_ref(), &test, MetricKind::Mse, &probe_opts)?;
    guard.verify()?;
    let result = build_result(
        task,
        upstream,
        manifest,
        MetricKind::Mse,
        fit.test_metric,
        &probe_opts,
        fit.probe.config.learning_rate,
        ResultExtras {
            feature: Some(feature),
            horizon,
            language,
            ..ResultExtras::default()
        },
    );
    Ok(finish(result, vec![fit], vec![test]))
}

/// Prosody reconstruction: frame-wise regression of the current frame's target.
pub fn run_pror(
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    cache: Option<FeatureCache>,
    opts: &RunOptions,
) -> Result<TaskRun> {
    run_frame_task("ProR", upstream, Mode::Full, manifest, feature, None, None, cache, opts)
}

/// Future value prediction from a causal upstream.
pub fn run_fvp(
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    horizon: HorizonSpec,
    cache: Option<FeatureCache>,
    opts: &RunOptions,
) -> Result<TaskRun> {
    let spec = upstream.spec();
    if !spec.causal_capable {
        return Err(Error::NotCausal(spec.name.clone()));
    }
    if horizon.stride_ms != spec.stride_ms {
        return Err(Error::Horizon(format!(
            "horizon built for {} ms frames, upstream stride is {} ms",
            horizon.stride_ms, spec.stride_ms
        )));
    }
    run_frame_task("FVP", upstream, Mode::Causal, manifest, feature, Some(horizon), None, cache, opts)
}

/// ProR on a non-English manifest; the result carries the language tag.
pub fn run_crosslingual(
    upstream: &dyn Upstream,
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    cache: Option<FeatureCache>,
    opts: &RunOptions,
) -> Result<TaskRun> {
    let first = manifest.records.first().ok_or(Error::Empty("manifest"))?;
    let language = first.language.clone();
    if manifest.records.iter().any(|r| r.language != language) {
        return Err(Error::Config(format!("manifest `{}` mixes languages", manifest.name)));
    }
    run_frame_task(
        "XL-ProR",
        upstream,
        Mode::Full,
        manifest,
        feature,
        None,
        Some(language),
        cache,
        opts,
    )
}

pub const BASELINE_NAME: &str = "fbank+rnn";

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub result: TaskResult,
    pub model: TrainedBaseline,
    pub sweep: Vec<SweepRow>,
}

/// FVP with causal FBANK features and the recurrent baseline.
pub fn run_fvp_baseline(
    manifest: &DatasetManifest,
    feature: ProsodyKind,
    horizon: HorizonSpec,
    cache: Option<FeatureCache>,
    rnn: &RnnConfig,
    lr_sweep: bool,
) -> Result<BaselineRun> {
    let fbank = Fbank::new();
    if horizon.stride_ms != fbank.spec().stride_ms {
        return Err(Error::Horizon(format!(
            "horizon built for {} ms frames, FBANK stride is {} ms",
            horizon.stride_ms,
            fbank.spec().stride_ms
        )));
    }
    let provider = FeatureProvider::new(&fbank, Mode::Causal, cache);
    let splits = frame_splits(&provider, manifest, feature, horizon.frame_offset)?;
    let (model, test_metric, sweep) = if lr_sweep {
        let dev = splits.dev.as_ref().ok_or(Error::MissingSplit("dev"))?;
        let runs: Vec<Result<Option<(TrainedBaseline, f64, f64)>>> = {
            use rayon::prelude::*;
            LEARNING_RATES
                .par_iter()
                .map(|&lr| {
                    let config = RnnConfig {
                        learning_rate: lr,
                        ..rnn.clone()
                    };
                    match rnn_baseline_train(&splits.train, &config) {
                        Ok(m) => {
                            let d = evaluate_baseline(&m, dev)?;
                            let t = evaluate_baseline(&m, &splits.test)?;
                            Ok(Some((m, d, t)))
                        }
                        Err(Error::Diverged { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        };
        let mut rows = Vec::new();
        let mut models = Vec::new();
        for (&lr, run) in LEARNING_RATES.iter().zip(runs) {
            let run = run?;
            rows.push(SweepRow {
                lr,
                dev_metric: run.as_ref().map_or(f64::NAN, |r| r.1),
                test_metric: run.as_ref().map_or(f64::NAN, |r| r.2),
                steps: rnn.train_steps,
                seed: rnn.seed,
                diverged: run.is_none(),
            });
            models.push(run.map(|r| r.0));
        }
        let best = crate::probe::select_best(&rows, false).ok_or(Error::AllDiverged)?;
        let model = models[best].take().expect("selected");
        (model, rows[best].test_metric, rows)
    } else {
        let model = rnn_baseline_train(&splits.train, rnn)?;
        let t = evaluate_baseline(&model, &splits.test)?;
        (model, t, Vec::new())
    };
    let checksum = fbank.parameter_checksum();
    let data_hash = manifest.data_hash();
    let rnn_json = serde_json::to_string(rnn)?;
    let fingerprint = FingerprintInputs {
        upstream: BASELINE_NAME,
        upstream_checksum: &checksum,
        task: "FVP",
        probe_config: &rnn_json,
        lr_sweep,
        seed: rnn.seed,
        data_hash: &data_hash,
        feature: Some(feature),
        horizon_ms: Some(horizon.horizon_ms),
        layers: None,
    }
    .digest();
    let result = TaskResult {
        task: "FVP".into(),
        upstream: BASELINE_NAME.into(),
        metric_name: MetricKind::Mse,
        value: test_metric,
        per_fold: None,
        horizon: Some(horizon.seconds()),
        feature: Some(feature),
        language: None,
        layers: None,
        learning_rate: model.config.learning_rate,
        seed: rnn.seed,
        config_fingerprint: fingerprint,
        timestamp: timestamp_now(),
    };
    Ok(BaselineRun { result, model, sweep })
}

/// Any probe-based task, for callers that dispatch on configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskSpec {
    Classification(ClassificationTask),
    ProR(ProsodyKind),
    Fvp(ProsodyKind, HorizonSpec),
    CrossLingual(ProsodyKind),
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Classification(t) => t.as_str(),
            TaskSpec::ProR(_) => "ProR",
            TaskSpec::Fvp(..) => "FVP",
            TaskSpec::CrossLingual(_) => "XL-ProR",
        }
    }

    pub fn metric(&self) -> MetricKind {
        match self {
            TaskSpec::Classification(t) => t.metric(),
            _ => MetricKind::Mse,
        }
    }

    pub fn run(
        &self,
        upstream: &dyn Upstream,
        manifest: &DatasetManifest,
        cache: Option<FeatureCache>,
        opts: &RunOptions,
    ) -> Result<TaskRun> {
        match *self {
            TaskSpec::Classification(t) => run_classification_task(t, upstream, manifest, cache, opts),
            TaskSpec::ProR(f) => run_pror(upstream, manifest, f, cache, opts),
            TaskSpec::Fvp(f, h) => run_fvp(upstream, manifest, f, h, cache, opts),
            TaskSpec::CrossLingual(f) => run_crosslingual(upstream, manifest, f, cache, opts),
        }
    }
}
