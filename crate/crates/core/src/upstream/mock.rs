use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::data::Waveform;
use crate::error::{Error, Result};
use crate::upstream::{LayerFeatureStack, Mode, Upstream, UpstreamSpec};

/// Copies a per-utterance signal into dimension 0 of one layer.
#[derive(Debug, Clone)]
pub struct PlantedLayer {
    pub layer: usize,
    pub signals: Arc<HashMap<String, Vec<f32>>>,
}

/// Frame-local deterministic upstream for tests: layer `l` at frame `t` is
/// `scale_l · tanh(P_l · s_t)` where `s_t` are the samples frame `t` owns and
/// `P_l` is a fixed Gaussian projection. Frame-local means causal in both modes.
#[derive(Debug, Clone)]
pub struct MockUpstream {
    spec: UpstreamSpec,
    seed: u64,
    projections: Vec<Array2<f32>>,
    scales: Vec<f32>,
    planted: Option<PlantedLayer>,
}

impl MockUpstream {
    pub fn new(name: &str, num_layers: usize, dim: usize, stride_ms: u32, seed: u64) -> Self {
        let spec = UpstreamSpec {
            name: name.to_string(),
            num_layers,
            dim,
            stride_ms,
            causal_capable: true,
            checkpoint_ref: format!("mock:{seed}"),
        };
        let hop = spec.hop_samples();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = 4.0 / (hop as f32).sqrt();
        let projections = (0..num_layers)
            .map(|_| {
                Array2::from_shape_fn((dim, hop), |_| {
                    let z: f32 = StandardNormal.sample(&mut rng);
                    z * gain
                })
            })
            .collect();
        let scales = (0..num_layers)
            .map(|l| 0.5 + ((l * 7 + seed as usize) % 5) as f32 * 0.25)
            .collect();
        MockUpstream {
            spec,
            seed,
            projections,
            scales,
            planted: None,
        }
    }

    pub fn with_planted(mut self, planted: PlantedLayer) -> Result<Self> {
        if planted.layer >= self.spec.num_layers {
            return Err(Error::LayerOutOfRange {
                index: planted.layer,
                num_layers: self.spec.num_layers,
            });
        }
        self.planted = Some(planted);
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Upstream for MockUpstream {
    fn spec(&self) -> &UpstreamSpec {
        &self.spec
    }

    fn extract(&self, waveform: &Waveform, mode: Mode) -> Result<LayerFeatureStack> {
        let hop = self.spec.hop_samples();
        let t_len = waveform.len() / hop;
        let (l_count, dim) = (self.spec.num_layers, self.spec.dim);
        let mut layers = Array3::<f32>::zeros((l_count, t_len, dim));
        for t in 0..t_len {
            let frame = &waveform.samples[t * hop..(t + 1) * hop];
            for l in 0..l_count {
                let p = &self.projections[l];
                for d in 0..dim {
                    let v: f32 = p.row(d).iter().zip(frame).map(|(a, b)| a * b).sum();
                    layers[[l, t, d]] = self.scales[l] * v.tanh();
                }
            }
        }
        if let Some(planted) = &self.planted {
            let signal = planted
                .signals
                .get(&waveform.utterance_id)
                .ok_or_else(|| Error::Upstream {
                    upstream: self.spec.name.clone(),
                    message: format!("no planted signal for `{}`", waveform.utterance_id),
                })?;
            for t in 0..t_len {
                layers[[planted.layer, t, 0]] = signal.get(t).copied().unwrap_or(0.0);
            }
        }
        LayerFeatureStack::new(layers, self.spec.stride_ms, waveform.utterance_id.clone(), mode)
    }

    fn parameter_checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.projections {
            for v in p.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        for s in &self.scales {
            hasher.update(s.to_le_bytes());
        }
        if let Some(planted) = &self.planted {
            hasher.update((planted.layer as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_layer_copies_signal() {
        let mut signals = HashMap::new();
        signals.insert("u".to_string(), vec![1.5, -2.0, 0.25]);
        let up = MockUpstream::new("m", 4, 3, 10, 7)
            .with_planted(PlantedLayer {
                layer: 2,
                signals: Arc::new(signals),
            })
            .unwrap();
        let stack = up
            .extract(&Waveform::new("u", vec![0.1; 160 * 3]), Mode::Full)
            .unwrap();
        assert_eq!(stack.layers[[2, 0, 0]], 1.5);
        assert_eq!(stack.layers[[2, 1, 0]], -2.0);
        assert!(up.extract(&Waveform::new("other", vec![0.1; 480]), Mode::Full).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let w = Waveform::new("u", (0..3200).map(|i| (i as f32 * 0.01).cos()).collect());
        let a = MockUpstream::new("m", 2, 5, 20, 1).extract(&w, Mode::Full).unwrap();
        let b = MockUpstream::new("m", 2, 5, 20, 1).extract(&w, Mode::Full).unwrap();
        let c = MockUpstream::new("m", 2, 5, 20, 2).extract(&w, Mode::Full).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.layers, c.layers);
    }
}
