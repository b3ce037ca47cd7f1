use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::probe::{argmax, mean_layer_norms, TrainedProbe, TrainingSet};
use crate::upstream::LayerFeatureStack;

/// c_i = mean L2 norm of layer i on test data × normalized weight of layer i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionProfile {
    pub upstream: String,
    pub task: String,
    pub c: Vec<f64>,
    pub norms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ContributionProfile {
    pub fn from_parts(upstream: &str, task: &str, norms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if norms.len() != weights.len() || norms.is_empty() {
            return Err(Error::Shape(format!(
                "{} norms for {} weights",
                norms.len(),
                weights.len()
            )));
        }
        let c = norms.iter().zip(&weights).map(|(n, w)| n * w).collect();
        Ok(ContributionProfile {
            upstream: upstream.to_string(),
            task: task.to_string(),
            c,
            norms,
            weights,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.c.len()
    }

    /// Layer with the largest contribution.
    pub fn best_layer(&self) -> usize {
        argmax(&self.c)
    }

    /// Re-checks c = norms ⊙ weights from the stored fields.
    pub fn identity_holds(&self) -> bool {
        self.c.len() == self.norms.len()
            && self
                .c
                .iter()
                .zip(self.norms.iter().zip(&self.weights))
                .all(|(c, (n, w))| *c == n * w)
    }
}

/// Mean over utterances of each utterance's frame-averaged layer norms.
pub fn mean_norms(stacks: &[LayerFeatureStack]) -> Result<Vec<f64>> {
    let first = stacks.first().ok_or(Error::Empty("test features"))?;
    let mut acc = vec![0.0; first.num_layers()];
    for stack in stacks {
        if stack.num_layers() != acc.len() {
            return Err(Error::Shape("test stacks disagree on layer count".into()));
        }
        for (a, n) in acc.iter_mut().zip(mean_layer_norms(stack)) {
            *a += n;
        }
    }
    Ok(acc.into_iter().map(|a| a / stacks.len() as f64).collect())
}

pub fn layer_contribution(
    test_features: &[LayerFeatureStack],
    probe: &TrainedProbe,
    upstream: &str,
) -> Result<ContributionProfile> {
    let norms = mean_norms(test_features)?;
    profile_for(norms, probe, upstream)
}

/// Contribution from a task run's test data (pooled or frame-level).
pub fn contribution_from_set(
    test: &TrainingSet,
    probe: &TrainedProbe,
    upstream: &str,
) -> Result<ContributionProfile> {
    let norms = match test {
        TrainingSet::Classification(set) => {
            if set.is_empty() {
                return Err(Error::Empty("test features"));
            }
            let mut acc = vec![0.0; set.num_layers()];
            for ex in &set.examples {
                for (a, n) in acc.iter_mut().zip(&ex.layer_norms) {
                    *a += n;
                }
            }
            acc.into_iter().map(|a| a / set.len() as f64).collect()
        }
        TrainingSet::Regression(set) => {
            if set.is_empty() {
                return Err(Error::Empty("test features"));
            }
            let mut acc = vec![0.0; set.num_layers()];
            for ex in &set.examples {
                for (a, n) in acc.iter_mut().zip(mean_layer_norms(&*ex.stack()?)) {
                    *a += n;
                }
            }
            acc.into_iter().map(|a| a / set.len() as f64).collect()
        }
    };
    profile_for(norms, probe, upstream)
}

fn profile_for(norms: Vec<f64>, probe: &TrainedProbe, upstream: &str) -> Result<ContributionProfile> {
    if norms.len() != probe.num_layers() {
        return Err(Error::Shape(format!(
            "{} test layers for a {}-layer probe",
            norms.len(),
            probe.num_layers()
        )));
    }
    ContributionProfile::from_parts(upstream, &probe.task, norms, probe.layer_weights.normalized())
}

/// Append-only JSONL file of contribution profiles.
#[derive(Debug, Clone)]
pub struct ContributionStore {
    path: PathBuf,
}

impl ContributionStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).at(parent)?;
        }
        Ok(ContributionStore { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, profile: &ContributionProfile) -> Result<()> {
        let mut line = serde_json::to_vec(profile)?;
        line.push(b'\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .at(&self.path)?;
        file.write_all(&line).at(&self.path)
    }

    pub fn read_all(&self) -> Result<Vec<ContributionProfile>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&self.path).at(&self.path)?;
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match serde_json::from_str(line) {
                Ok(p) => out.push(p),
                Err(_) if i + 1 == lines.len() => {
                    log::warn!("ignoring incomplete last line of {}", self.path.display())
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }
}
