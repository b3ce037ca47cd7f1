//! Run configuration: a versioned key-value file, overridden by flags, with
//! environment variables supplying the cache and results roots.
//!
//! ```text
//! prosody-probe-config 1
//! upstream = hubert_base
//! task = FVP
//! manifest = data/libritts.jsonl
//! feature = pitch
//! horizon = 0.12
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use prosody_probe::prosody::ProsodyKind;
use prosody_probe::tasks::{ClassificationTask, HorizonSpec, BASELINE_NAME, DEFAULT_FOLDS};
use prosody_probe::upstream::{Upstream, UpstreamRegistry};

pub const CONFIG_HEADER: &str = "prosody-probe-config";
pub const CONFIG_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "PROSODY_PROBE_CACHE";
pub const RESULTS_ENV: &str = "PROSODY_PROBE_RESULTS";

const KEYS: &[&str] = &[
    "upstream",
    "task",
    "manifest",
    "feature",
    "horizon",
    "lr_sweep",
    "seed",
    "cache_dir",
    "results_dir",
    "report_dir",
    "registry",
    "learning_rate",
    "train_steps",
    "folds",
    "best_layer",
];

/// Invalid or incomplete configuration; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| usage("config file is empty"))?;
        let version = header
            .strip_prefix(CONFIG_HEADER)
            .map(str::trim)
            .ok_or_else(|| usage(format!("config must start with `{CONFIG_HEADER} {CONFIG_VERSION}`")))?;
        if version != CONFIG_VERSION.to_string() {
            return Err(usage(format!("unsupported config version `{version}`")));
        }
        let mut values = BTreeMap::new();
        for (n, line) in lines {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {n}: expected `key = value`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(usage(format!("line {n}: unknown key `{key}`")));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Key-value config file; flags override its values.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub upstream: Option<String>,
    /// SA-2, SA-7, SarD, PP, ProR, FVP or XL-ProR.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// pitch or energy (frame-level tasks only).
    #[arg(long)]
    pub feature: Option<String>,
    /// FVP horizon in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Sweep learning rates and select on the dev split.
    #[arg(long)]
    pub lr_sweep: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub results_dir: Option<PathBuf>,
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    /// Upstream registry TOML file.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Learning rate used when not sweeping.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub train_steps: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Best layer for integration; defaults to the stored contribution argmax.
    #[arg(long)]
    pub best_layer: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskId {
    Classification(ClassificationTask),
    ProR,
    Fvp,
    CrossLingual,
}

impl TaskId {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Classification(t) => t.as_str(),
            TaskId::ProR => "ProR",
            TaskId::Fvp => "FVP",
            TaskId::CrossLingual => "XL-ProR",
        }
    }

    pub fn is_frame_level(self) -> bool {
        !matches!(self, TaskId::Classification(_))
    }
}

impl FromStr for TaskId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pror" => TaskId::ProR,
            "fvp" => TaskId::Fvp,
            "xl-pror" => TaskId::CrossLingual,
            "sa" => return Err(usage("task `SA` is ambiguous: use SA-2 or SA-7")),
            _ => TaskId::Classification(
                s.parse().map_err(|_| usage(format!("unknown task `{s}`")))?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub upstream: Option<String>,
    pub task: Option<TaskId>,
    pub manifest: Option<PathBuf>,
    pub feature: Option<ProsodyKind>,
    pub horizon: Option<f64>,
    pub lr_sweep: bool,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub results_dir: PathBuf,
    pub report_dir: PathBuf,
    pub registry: Option<PathBuf>,
    pub learning_rate: Option<f64>,
    pub train_steps: Option<usize>,
    pub folds: usize,
    pub best_layer: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| usage(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Merges flags over the config file over the environment.
    pub fn resolve(args: &ConfigArgs, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let get = |key: &str| file.values.get(key).cloned();
        fn pick<T: FromStr>(flag: Option<T>, key: &str, file: Option<String>) -> Result<Option<T>> {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => parse_value(key, &s).map(Some),
                (None, None) => Ok(None),
            }
        }
        let task = match args.task.clone().or_else(|| get("task")) {
            Some(t) => Some(t.parse::<TaskId>()?),
            None => None,
        };
        let feature = match args.feature.clone().or_else(|| get("feature")) {
            Some(f) => Some(f.parse::<ProsodyKind>().map_err(|e| usage(e.to_string()))?),
            None => None,
        };
        let results_dir = pick(args.results_dir.clone(), "results_dir", get("results_dir"))?
            .or_else(|| env(RESULTS_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"));
        let report_dir = pick(args.report_dir.clone(), "report_dir", get("report_dir"))?
            .unwrap_or_else(|| results_dir.join("report"));
        let config = RunConfig {
            upstream: args.upstream.clone().or_else(|| get("upstream")),
            task,
            manifest: pick(args.manifest.clone(), "manifest", get("manifest"))?,
            feature,
            horizon: pick(args.horizon, "horizon", get("horizon"))?,
            lr_sweep: pick(args.lr_sweep, "lr_sweep", get("lr_sweep"))?.unwrap_or(true),
            seed: pick(args.seed, "seed", get("seed"))?.unwrap_or(0),
            cache_dir: pick(args.cache_dir.clone(), "cache_dir", get("cache_dir"))?
                .or_else(|| env(CACHE_ENV).map(PathBuf::from)),
            results_dir,
            report_dir,
            registry: pick(args.registry.clone(), "registry", get("registry"))?,
            learning_rate: pick(args.learning_rate, "learning_rate", get("learning_rate"))?,
            train_steps: pick(args.train_steps, "train_steps", get("train_steps"))?,
            folds: pick(args.folds, "folds", get("folds"))?.unwrap_or(DEFAULT_FOLDS),
            best_layer: pick(args.best_layer, "best_layer", get("best_layer"))?,
        };
        config.check_invariants()?;
        Ok(config)
    }

    fn check_invariants(&self) -> Result<()> {
        if let Some(task) = self.task {
            if self.horizon.is_some() && task != TaskId::Fvp {
                return Err(usage(format!("horizon applies only to FVP, not {}", task.as_str())));
            }
            if self.feature.is_some() && !task.is_frame_level() {
                return Err(usage(format!(
                    "feature applies only to ProR, FVP and XL-ProR, not {}",
                    task.as_str()
                )));
            }
        }
        if self.is_baseline() && self.task.is_some_and(|t| t != TaskId::Fvp) {
            return Err(usage(format!("{BASELINE_NAME} is an FVP baseline only")));
        }
        Ok(())
    }

    pub fn is_baseline(&self) -> bool {
        self.upstream.as_deref() == Some(BASELINE_NAME)
    }

    pub fn require_task(&self) -> Result<TaskId> {
        self.task.ok_or_else(|| usage("missing --task"))
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        self.manifest.as_deref().ok_or_else(|| usage("missing --manifest"))
    }

    pub fn require_upstream(&self) -> Result<&str> {
        self.upstream.as_deref().ok_or_else(|| usage("missing --upstream"))
    }

    pub fn require_feature(&self) -> Result<ProsodyKind> {
        self.feature
            .ok_or_else(|| usage(format!("{} needs --feature pitch|energy", self.task.map_or("task", TaskId::as_str))))
    }

    /// The FVP horizon checked against the upstream's frame stride.
    pub fn require_horizon(&self, stride_ms: u32) -> Result<HorizonSpec> {
        let seconds = self.horizon.ok_or_else(|| usage("FVP needs --horizon (seconds)"))?;
        HorizonSpec::from_seconds(seconds, stride_ms).map_err(|e| usage(e.to_string()))
    }

    pub fn registry(&self) -> Result<UpstreamRegistry> {
        match &self.registry {
            Some(path) => Ok(UpstreamRegistry::load(path)?),
            None => Ok(UpstreamRegistry::with_builtins()),
        }
    }

    pub fn instantiate_upstream(&self) -> Result<Box<dyn Upstream>> {
        let name = self.require_upstream()?;
        if name == BASELINE_NAME {
            bail!("{BASELINE_NAME} is not a probe upstream");
        }
        self.registry()?
            .instantiate(name)
            .map_err(|e| anyhow!(e))
    }

    pub fn results_path(&self) -> PathBuf {
        self.results_dir.join("results.jsonl")
    }

    pub fn contributions_path(&self) -> PathBuf {
        self.results_dir.join("contributions.jsonl")
    }

    pub fn probe_dir(&self, fingerprint: &str) -> PathBuf {
        self.results_dir.join("probes").join(fingerprint)
    }

    pub fn sweep_path(&self, fingerprint: &str) -> PathBuf {
        self.results_dir.join("sweeps").join(format!("{fingerprint}.tsv"))
    }
}
