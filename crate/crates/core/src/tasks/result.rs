use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};
use crate::prosody::ProsodyKind;
use crate::tasks::MetricKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub upstream: String,
    pub metric_name: MetricKind,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_fold: Option<Vec<f64>>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<ProsodyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    /// Selected learning rate (per fold, the first fold's).
    pub learning_rate: f64,
    pub seed: u64,
    pub config_fingerprint: String,
    pub timestamp: String,
}

impl TaskResult {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.metric_name {
            MetricKind::Accuracy | MetricKind::F1 => (0.0..=1.0).contains(&self.value),
            MetricKind::Mse => self.value >= 0.0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "{} value {} out of range",
                self.metric_name, self.value
            )));
        }
        Ok(())
    }
}

/// Inputs that determine a result; hashed into its fingerprint.
#[derive(Debug, Clone, Serialize)]
pub struct FingerprintInputs<'a> {
    pub upstream: &'a str,
    pub upstream_checksum: &'a str,
    pub task: &'a str,
    pub probe_config: &'a str,
    pub lr_sweep: bool,
    pub seed: u64,
    pub data_hash: &'a str,
    pub feature: Option<ProsodyKind>,
    pub horizon_ms: Option<u32>,
    pub layers: Option<&'a [usize]>,
}

impl FingerprintInputs<'_> {
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializable")))
    }
}

pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Append-only JSONL store of task results.
#[derive(Debug, Clone)]
pub struct ResultsStore {
    path: PathBuf,
}

impl ResultsStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).at(parent)?;
        }
        Ok(ResultsStore { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record as a single write on an append-mode handle.
    pub fn append(&self, result: &TaskResult) -> Result<()> {
        result.validate()?;
        let mut line = serde_json::to_vec(result)?;
        line.push(b'\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .at(&self.path)?;
        file.write_all(&line).at(&self.path)?;
        file.flush().at(&self.path)
    }

    /// Reads every record. A truncated trailing line (concurrent writer) is ignored.
    pub fn read_all(&self) -> Result<Vec<TaskResult>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let file = File::open(&self.path).at(&self.path)?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .at(&self.path)?;
        let last = lines.len().saturating_sub(1);
        let mut out = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(r) => out.push(r),
                Err(_) if i == last => log::warn!("ignoring incomplete last line of {}", self.path.display()),
                Err(e) => {
                    return Err(Error::Manifest {
                        path: self.path.clone(),
                        message: format!("line {}: {e}", i + 1),
                    })
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(value: f64) -> TaskResult {
        TaskResult {
            task: "ProR".into(),
            upstream: "fbank".into(),
            metric_name: MetricKind::Mse,
            value,
            per_fold: None,
            horizon: None,
            feature: Some(ProsodyKind::Pitch),
            language: None,
            layers: None,
            learning_rate: 1e-3,
            seed: 0,
            config_fingerprint: "abc".into(),
            timestamp: timestamp_now(),
        }
    }

    #[test]
    fn append_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResultsStore::open(dir.path().join("r/results.jsonl")).unwrap();
        assert!(store.read_all().unwrap().is_empty());
        store.append(&sample(0.1)).unwrap();
        store.append(&sample(0.2)).unwrap();
        let rows = store.read_all().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].value, 0.2);
    }

    #[test]
    fn out_of_range_metric_rejected() {
        let mut r = sample(-1.0);
        assert!(r.validate().is_err());
        r.metric_name = MetricKind::Accuracy;
        r.value = 1.5;
        assert!(r.validate().is_err());
    }

    #[test]
    fn fingerprint_changes_with_seed() {
        let mut f = FingerprintInputs {
            upstream: "fbank",
            upstream_checksum: "x",
            task: "ProR",
            probe_config: "c",
            lr_sweep: true,
            seed: 0,
            data_hash: "d",
            feature: None,
            horizon_ms: None,
            layers: None,
        };
        let a = f.digest();
        f.seed = 1;
        assert_ne!(a, f.digest());
    }
}
