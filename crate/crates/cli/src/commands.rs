use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde_json::{json, Map, Value};

use prosody_probe::analysis::{
    integrate_layers, layer_contribution, render_report, ContributionProfile, ContributionStore, IntegrationSpec,
};
use prosody_probe::data::{fold_groups, load_manifest, make_folds, DatasetManifest, FeatureCache, SplitName, Task};
use prosody_probe::probe::{sweep_table_tsv, ProbeConfig, SweepRow, TrainedProbe};
use prosody_probe::prosody::ProsodyKind;
use prosody_probe::tasks::{
    run_fvp_baseline, ClassificationTask, FeatureProvider, Provenance, ResultsStore, RnnConfig, RunOptions,
    TaskResult, TaskSpec, TRACK_HOP_MS,
};
use prosody_probe::upstream::{Fbank, Mode, Upstream};

use crate::config::{RunConfig, TaskId};

/// What a command did: fields for the summary line and whether all
/// requested work succeeded.
#[derive(Debug, Default)]
pub struct Report {
    pub fields: Map<String, Value>,
    pub ok: bool,
}

impl Report {
    fn ok(fields: Value) -> Self {
        let Value::Object(fields) = fields else { unreachable!("summary fields are an object") };
        Report { fields, ok: true }
    }
}

fn manifest_task(task: TaskId) -> Task {
    match task {
        TaskId::Classification(t) => t.manifest_task(),
        TaskId::ProR => Task::ProsodyReconstruction,
        TaskId::Fvp => Task::FutureValuePrediction,
        TaskId::CrossLingual => Task::CrossLingual,
    }
}

fn mode_for(task: Option<TaskId>) -> Mode {
    if task == Some(TaskId::Fvp) {
        Mode::Causal
    } else {
        Mode::Full
    }
}

fn open_cache(config: &RunConfig) -> Result<Option<FeatureCache>> {
    config
        .cache_dir
        .as_ref()
        .map(|dir| FeatureCache::open(dir.clone()).with_context(|| format!("cache {}", dir.display())))
        .transpose()
}

fn load(config: &RunConfig) -> Result<DatasetManifest> {
    let path = config.require_manifest()?;
    Ok(load_manifest(path)?)
}

fn task_spec(config: &RunConfig, upstream: &dyn Upstream) -> Result<TaskSpec> {
    Ok(match config.require_task()? {
        TaskId::Classification(t) => TaskSpec::Classification(t),
        TaskId::ProR => TaskSpec::ProR(config.require_feature()?),
        TaskId::Fvp => TaskSpec::Fvp(
            config.require_feature()?,
            config.require_horizon(upstream.spec().stride_ms)?,
        ),
        TaskId::CrossLingual => TaskSpec::CrossLingual(config.require_feature()?),
    })
}

fn run_options(config: &RunConfig, task: TaskId, force_sweep: bool) -> Result<RunOptions> {
    let mut probe = ProbeConfig::for_task(manifest_task(task));
    probe.seed = config.seed;
    if let Some(lr) = config.learning_rate {
        probe.learning_rate = lr;
    }
    if let Some(steps) = config.train_steps {
        probe.train_steps = steps;
    }
    probe.validate()?;
    let mut opts = RunOptions::new(probe);
    opts.lr_sweep = config.lr_sweep || force_sweep;
    opts.folds = config.folds;
    Ok(opts)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_sweeps(config: &RunConfig, fingerprint: &str, sweeps: &[Vec<SweepRow>]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (i, rows) in sweeps.iter().enumerate().filter(|(_, r)| !r.is_empty()) {
        let mut path = config.sweep_path(fingerprint);
        if sweeps.len() > 1 {
            path.set_extension(format!("fold{i}.tsv"));
        }
        write_file(&path, &sweep_table_tsv(rows))?;
        paths.push(path);
    }
    Ok(paths)
}

fn describe(result: &TaskResult) -> String {
    let mut line = format!("{} {}: {} {:.4}", result.task, result.upstream, result.metric_name, result.value);
    if let Some(folds) = &result.per_fold {
        let folds: Vec<String> = folds.iter().map(|v| format!("{v:.4}")).collect();
        line.push_str(&format!(" (folds: {})", folds.join(", ")));
    }
    if let Some(h) = result.horizon {
        line.push_str(&format!(" at h={h}s"));
    }
    line.push_str(&format!(" [lr {:e}, fingerprint {}]", result.learning_rate, result.config_fingerprint));
    line
}

fn result_fields(result: &TaskResult) -> Value {
    json!({
        "task": result.task,
        "upstream": result.upstream,
        "metric": result.metric_name.to_string(),
        "value": result.value,
        "per_fold": result.per_fold,
        "feature": result.feature.map(|f| f.as_str()),
        "horizon": result.horizon,
        "layers": result.layers,
        "learning_rate": result.learning_rate,
        "seed": result.seed,
        "fingerprint": result.config_fingerprint,
    })
}

/// Populates the cache with features and prosody tracks for every record.
pub fn extract(config: &RunConfig) -> Result<Report> {
    let cache = open_cache(config)?
        .ok_or_else(|| anyhow!("extract needs a cache: pass --cache-dir or set PROSODY_PROBE_CACHE"))?;
    let manifest = load(config)?;
    let upstream: Box<dyn Upstream> = if config.is_baseline() {
        Box::new(Fbank::new())
    } else {
        config.instantiate_upstream()?
    };
    let mode = if config.is_baseline() { Mode::Causal } else { mode_for(config.task) };
    let kinds: Vec<ProsodyKind> = match config.feature {
        Some(f) => vec![f],
        None if manifest.task.is_frame_level() => vec![ProsodyKind::Pitch, ProsodyKind::Energy],
        None => Vec::new(),
    };
    let provider = FeatureProvider::new(upstream.as_ref(), mode, Some(cache));
    let (mut new, mut reused, mut failed) = (0usize, 0usize, Vec::new());
    for record in &manifest.records {
        let outcome = (|| -> prosody_probe::Result<bool> {
            let (_, p) = provider.features(record)?;
            let mut extracted = p == Provenance::Extracted;
            for &kind in &kinds {
                extracted |= provider.track(record, kind)?.1 == Provenance::Extracted;
            }
            Ok(extracted)
        })();
        match outcome {
            Ok(true) => new += 1,
            Ok(false) => reused += 1,
            Err(e) => {
                warn!("{}: {e}", record.id);
                failed.push(record.id.clone());
            }
        }
    }
    println!(
        "{}: {} records ({} mode, tracks at {TRACK_HOP_MS} ms): {new} new, {reused} reused, {} failed",
        upstream.spec().name,
        manifest.len(),
        mode.as_str(),
        failed.len()
    );
    let mut report = Report::ok(json!({
        "upstream": upstream.spec().name,
        "mode": mode.as_str(),
        "records": manifest.len(),
        "new": new,
        "reused": reused,
        "failed": failed.len(),
        "failed_ids": failed,
    }));
    report.ok = failed.is_empty();
    Ok(report)
}

/// Trains and evaluates one task, appending the result to the store.
pub fn run(config: &RunConfig, force_sweep: bool) -> Result<Report> {
    let task = config.require_task()?;
    let manifest = load(config)?;
    let cache = open_cache(config)?;
    let store = ResultsStore::open(config.results_path())?;

    if config.is_baseline() {
        let feature = config.require_feature()?;
        let horizon = config.require_horizon(Fbank::new().spec().stride_ms)?;
        let opts = run_options(config, task, force_sweep)?;
        let rnn = RnnConfig {
            learning_rate: opts.probe.learning_rate,
            train_steps: opts.probe.train_steps,
            seed: config.seed,
            ..RnnConfig::default()
        };
        let run = run_fvp_baseline(&manifest, feature, horizon, cache, &rnn, opts.lr_sweep)?;
        let fp = run.result.config_fingerprint.clone();
        let model_path = config.probe_dir(&fp).join("baseline.json");
        write_file(&model_path, &serde_json::to_string_pretty(&run.model)?)?;
        let sweeps = write_sweeps(config, &fp, std::slice::from_ref(&run.sweep))?;
        store.append(&run.result)?;
        println!("{}", describe(&run.result));
        let mut report = Report::ok(result_fields(&run.result));
        report.fields.insert("model".into(), json!(model_path));
        report.fields.insert("sweeps".into(), json!(sweeps));
        return Ok(report);
    }

    let upstream = config.instantiate_upstream()?;
    let spec = task_spec(config, upstream.as_ref())?;
    let opts = run_options(config, task, force_sweep)?;
    let run = spec.run(upstream.as_ref(), &manifest, cache, &opts)?;
    let fp = run.result.config_fingerprint.clone();
    let probe_dir = config.probe_dir(&fp);
    for (i, probe) in run.probes.iter().enumerate() {
        probe.save(&probe_dir.join(format!("probe-{i}.json")))?;
    }
    let sweeps = write_sweeps(config, &fp, &run.sweeps)?;
    for path in &sweeps {
        if force_sweep {
            print!("{}", fs::read_to_string(path)?);
        }
        info!("sweep table written to {}", path.display());
    }
    store.append(&run.result)?;
    println!("{}", describe(&run.result));
    let mut report = Report::ok(result_fields(&run.result));
    report.fields.insert("probes".into(), json!(probe_dir));
    report.fields.insert("sweeps".into(), json!(sweeps));
    report.fields.insert("results".into(), json!(store.path()));
    Ok(report)
}

fn matches_setting(r: &TaskResult, config: &RunConfig, task: TaskId, upstream: &str) -> bool {
    r.task == task.as_str()
        && r.upstream == upstream
        && r.feature == config.feature
        && r.layers.is_none()
        && match (r.horizon, config.horizon) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-9,
            (None, None) => true,
            _ => false,
        }
}

/// Records whose features the stored probe is analyzed on: the test split,
/// or the first cross-validation fold for fold-based manifests.
fn analysis_records<'a>(
    manifest: &'a DatasetManifest,
    config: &RunConfig,
    task: TaskId,
) -> Result<Vec<&'a prosody_probe::data::UtteranceRecord>> {
    if task == TaskId::Classification(ClassificationTask::Sarcasm) {
        let groups = fold_groups(manifest);
        let ids: Vec<usize> = if groups.is_empty() {
            let assignment = make_folds(manifest, config.folds, config.seed)?;
            manifest
                .records
                .iter()
                .enumerate()
                .filter(|(_, r)| assignment.fold_of(&r.id) == Some(0))
                .map(|(i, _)| i)
                .collect()
        } else {
            groups.into_iter().next().map(|(_, v)| v).unwrap_or_default()
        };
        return Ok(ids.into_iter().map(|i| &manifest.records[i]).collect());
    }
    Ok(manifest.split(SplitName::Test).collect())
}

/// Layerwise contribution of the most recent stored probe for the setting.
pub fn analyze(config: &RunConfig) -> Result<Report> {
    let task = config.require_task()?;
    let name = config.require_upstream()?.to_string();
    if config.is_baseline() {
        bail!("contribution analysis needs a weighted-sum probe, not {name}");
    }
    let store = ResultsStore::open(config.results_path())?;
    let result = store
        .read_all()?
        .into_iter()
        .rev()
        .find(|r| matches_setting(r, config, task, &name))
        .ok_or_else(|| {
            anyhow!(
                "no stored {} result for upstream `{name}` in {}: run `prosody-probe run` first",
                task.as_str(),
                store.path().display()
            )
        })?;
    let probe_path = config.probe_dir(&result.config_fingerprint).join("probe-0.json");
    if !probe_path.exists() {
        bail!("trained probe {} is missing: rerun `prosody-probe run`", probe_path.display());
    }
    let probe = TrainedProbe::load(&probe_path)?;
    let manifest = load(config)?;
    let upstream = config.instantiate_upstream()?;
    let provider = FeatureProvider::new(upstream.as_ref(), mode_for(Some(task)), open_cache(config)?);
    let stacks = analysis_records(&manifest, config, task)?
        .into_iter()
        .map(|r| provider.features(r).map(|(s, _)| s))
        .collect::<prosody_probe::Result<Vec<_>>>()?;
    let profile = layer_contribution(&stacks, &probe, &name)?;
    ContributionStore::open(config.contributions_path())?.append(&profile)?;
    let table = config
        .report_dir
        .join(format!("contribution_{}_{}.tsv", task.as_str(), name));
    write_file(&table, &profile_tsv(&profile))?;
    println!(
        "{} {}: best layer {} of {} (c = {})",
        task.as_str(),
        name,
        profile.best_layer(),
        profile.num_layers(),
        profile.c.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(" ")
    );
    Ok(Report::ok(json!({
        "task": task.as_str(),
        "upstream": name,
        "layers": profile.num_layers(),
        "best_layer": profile.best_layer(),
        "c": profile.c,
        "fingerprint": result.config_fingerprint,
        "profile": table,
    })))
}

fn profile_tsv(profile: &ContributionProfile) -> String {
    let mut out = String::from("layer\tnorm\tweight\tc\n");
    for i in 0..profile.num_layers() {
        out.push_str(&format!("{i}\t{}\t{}\t{}\n", profile.norms[i], profile.weights[i], profile.c[i]));
    }
    out
}

/// Compares the early-layers set with the window around the best layer.
pub fn integrate(config: &RunConfig) -> Result<Report> {
    let task = config.require_task()?;
    let name = config.require_upstream()?.to_string();
    let upstream = config.instantiate_upstream()?;
    let best = match config.best_layer {
        Some(b) => b,
        None => ContributionStore::open(config.contributions_path())?
            .read_all()?
            .into_iter()
            .rev()
            .find(|p| p.upstream == name && p.task == task.as_str())
            .map(|p| p.best_layer())
            .ok_or_else(|| {
                anyhow!(
                    "no contribution profile for {} on `{name}`: run `prosody-probe analyze` or pass --best-layer",
                    task.as_str()
                )
            })?,
    };
    let integration = IntegrationSpec::around_best(best, upstream.spec().num_layers)?;
    let manifest = load(config)?;
    let spec = task_spec(config, upstream.as_ref())?;
    let opts = run_options(config, task, false)?;
    let outcome = integrate_layers(spec, upstream.as_ref(), &manifest, open_cache(config)?, &integration, &opts)?;
    let store = ResultsStore::open(config.results_path())?;
    for run in &outcome.runs {
        store.append(&run.result)?;
    }
    let table = outcome.table_tsv();
    let path = config
        .report_dir
        .join(format!("integration_{}_{}.tsv", task.as_str(), name));
    write_file(&path, &table)?;
    print!("{table}");
    let [a, b] = outcome.values();
    Ok(Report::ok(json!({
        "task": task.as_str(),
        "upstream": name,
        "best_layer": best,
        "layer_sets": outcome.spec.layer_sets,
        "values": [a, b],
        "head_parameters": outcome.head_parameters,
        "fingerprints": outcome.runs.iter().map(|r| r.result.config_fingerprint.clone()).collect::<Vec<_>>(),
        "table": path,
    })))
}

/// Renders charts and tables from the results and contribution stores.
pub fn report(config: &RunConfig) -> Result<Report> {
    let results = ResultsStore::open(config.results_path())?.read_all()?;
    let contributions = ContributionStore::open(config.contributions_path())?.read_all()?;
    let summary = render_report(&results, &contributions, &config.report_dir)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(Report::ok(json!({
        "results": results.len(),
        "contributions": contributions.len(),
        "files": summary.files.len(),
        "skipped": summary.skipped,
        "report_dir": config.report_dir,
    })))
}
