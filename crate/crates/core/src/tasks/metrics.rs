use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "accuracy")]
    Accuracy,
    /// F1 of the positive class (label 1).
    #[serde(rename = "F1")]
    F1,
    #[serde(rename = "MSE")]
    Mse,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::F1 => "F1",
            MetricKind::Mse => "MSE",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, MetricKind::Mse)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(MetricKind::Accuracy),
            "F1" | "f1" => Ok(MetricKind::F1),
            "MSE" | "mse" => Ok(MetricKind::Mse),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

pub fn compute_metric(predictions: &[f64], references: &[f64], kind: MetricKind) -> Result<f64> {
    check_lengths(predictions.len(), references.len())?;
    let n = predictions.len() as f64;
    Ok(match kind {
        MetricKind::Accuracy => {
            predictions.iter().zip(references).filter(|(p, r)| p == r).count() as f64 / n
        }
        MetricKind::F1 => {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (&p, &r) in predictions.iter().zip(references) {
                match (p == 1.0, r == 1.0) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            if tp == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            }
        }
        MetricKind::Mse => {
            predictions
                .iter()
                .zip(references)
                .map(|(p, r)| (p - r) * (p - r))
                .sum::<f64>()
                / n
        }
    })
}

/// MSE restricted to frames where `mask` is set.
pub fn compute_masked_mse(predictions: &[f64], references: &[f64], mask: &[bool]) -> Result<f64> {
    check_lengths(predictions.len(), references.len())?;
    check_lengths(predictions.len(), mask.len())?;
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, r), &m) in predictions.iter().zip(references).zip(mask) {
        if m {
            sum += (p - r) * (p - r);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoVoicedFrames("metric input"));
    }
    Ok(sum / n as f64)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::Empty("metric input"));
    }
    if a != b {
        return Err(Error::Shape(format!("{a} predictions for {b} references")));
    }
    Ok(())
}
