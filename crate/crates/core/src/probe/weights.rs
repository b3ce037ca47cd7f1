use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// w = softmax(raw): positive, sums to one.
    #[default]
    Softmax,
    /// w = raw, unconstrained.
    Raw,
}

/// Learnable per-layer scalars of the weighted-sum aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub raw: Vec<f64>,
    pub normalization: Normalization,
}

impl LayerWeights {
    /// Uniform weights: raw zeros under softmax, 1/L in raw mode.
    pub fn uniform(num_layers: usize, normalization: Normalization) -> Self {
        let init = match normalization {
            Normalization::Softmax => 0.0,
            Normalization::Raw => 1.0 / num_layers as f64,
        };
        LayerWeights {
            raw: vec![init; num_layers],
            normalization,
        }
    }

    pub fn from_raw(raw: Vec<f64>, normalization: Normalization) -> Self {
        LayerWeights { raw, normalization }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn normalized(&self) -> Vec<f64> {
        normalize(&self.raw, self.normalization)
    }
}

pub(crate) fn normalize(raw: &[f64], normalization: Normalization) -> Vec<f64> {
    match normalization {
        Normalization::Raw => raw.to_vec(),
        Normalization::Softmax => {
            let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = raw.iter().map(|r| (r - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / total).collect()
        }
    }
}

/// Chain rule through the normalization: d loss / d raw from d loss / d w.
pub(crate) fn normalization_backward(
    weights: &[f64],
    grad_weights: &[f64],
    normalization: Normalization,
) -> Vec<f64> {
    match normalization {
        Normalization::Raw => grad_weights.to_vec(),
        Normalization::Softmax => {
            let dot: f64 = weights.iter().zip(grad_weights).map(|(w, g)| w * g).sum();
            weights
                .iter()
                .zip(grad_weights)
                .map(|(w, g)| w * (g - dot))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_softmax() {
        let w = LayerWeights::uniform(4, Normalization::Softmax).normalized();
        assert!(w.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn softmax_is_positive_and_sums_to_one(raw in proptest::collection::vec(-30.0f64..30.0, 1..16)) {
            let w = normalize(&raw, Normalization::Softmax);
            prop_assert!(w.iter().all(|&v| v > 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
