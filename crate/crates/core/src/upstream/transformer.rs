//! Small self-attention upstream with deterministic weights, used to
//! exercise the causal-mask contract.

use ndarray::{Array2, Array3, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::data::Waveform;
use crate::error::Result;
use crate::upstream::{LayerFeatureStack, Mode, Upstream, UpstreamSpec};

#[derive(Debug, Clone)]
struct Block {
    query: Array2<f64>,
    key: Array2<f64>,
    value: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct MockTransformer {
    spec: UpstreamSpec,
    embed: Array2<f64>,
    blocks: Vec<Block>,
    honors_causal_mode: bool,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

impl MockTransformer {
    /// `num_blocks` attention blocks plus the embedding give `num_blocks + 1` layers.
    pub fn new(name: &str, num_blocks: usize, dim: usize, stride_ms: u32, seed: u64) -> Self {
        let spec = UpstreamSpec {
            name: name.to_string(),
            num_layers: num_blocks + 1,
            dim,
            stride_ms,
            causal_capable: true,
            checkpoint_ref: format!("mock-transformer:{seed}"),
        };
        let hop = spec.hop_samples();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embed = gaussian(&mut rng, dim, hop, 4.0 / (hop as f64).sqrt());
        let s = 1.0 / (dim as f64).sqrt();
        let blocks = (0..num_blocks)
            .map(|_| Block {
                query: gaussian(&mut rng, dim, dim, s),
                key: gaussian(&mut rng, dim, dim, s),
                value: gaussian(&mut rng, dim, dim, s),
            })
            .collect();
        MockTransformer {
            spec,
            embed,
            blocks,
            honors_causal_mode: true,
        }
    }

    /// A bidirectional model whose causal mode forgets to apply the mask.
    pub fn unmasked(name: &str, num_blocks: usize, dim: usize, stride_ms: u32, seed: u64) -> Self {
        MockTransformer {
            honors_causal_mode: false,
            ..Self::new(name, num_blocks, dim, stride_ms, seed)
        }
    }

    fn attend(&self, block: &Block, h: &Array2<f64>, masked: bool) -> Array2<f64> {
        let q = h.dot(&block.query.t());
        let k = h.dot(&block.key.t());
        let v = h.dot(&block.value.t());
        let t_len = h.nrows();
        let scale = 1.0 / (self.spec.dim as f64).sqrt();
        let mut out = h.clone();
        let mut scores = vec![0.0; t_len];
        for t in 0..t_len {
            let visible = if masked { t + 1 } else { t_len };
            let qt: ArrayView1<f64> = q.row(t);
            let mut max = f64::NEG_INFINITY;
            for u in 0..visible {
                scores[u] = qt.dot(&k.row(u)) * scale;
                max = max.max(scores[u]);
            }
            let mut total = 0.0;
            for s in &mut scores[..visible] {
                *s = (*s - max).exp();
                total += *s;
            }
            let mut mixed = ndarray::Array1::<f64>::zeros(self.spec.dim);
            for u in 0..visible {
                mixed.scaled_add(scores[u] / total, &v.row(u));
            }
            let mut row = out.row_mut(t);
            row.zip_mut_with(&mixed, |o, m| *o += m.tanh());
        }
        out
    }
}

impl Upstream for MockTransformer {
    fn spec(&self) -> &UpstreamSpec {
        &self.spec
    }

    fn extract(&self, waveform: &Waveform, mode: Mode) -> Result<LayerFeatureStack> {
        let hop = self.spec.hop_samples();
        let t_len = waveform.len() / hop;
        let frames = Array2::from_shape_fn((t_len, hop), |(t, i)| waveform.samples[t * hop + i] as f64);
        let mut h = frames.dot(&self.embed.t()).mapv(f64::tanh);
        let masked = mode == Mode::Causal && self.honors_causal_mode;
        let mut layers = Array3::<f32>::zeros((self.spec.num_layers, t_len, self.spec.dim));
        layers
            .index_axis_mut(Axis(0), 0)
            .assign(&h.mapv(|v| v as f32));
        for (b, block) in self.blocks.iter().enumerate() {
            h = self.attend(block, &h, masked);
            layers
                .index_axis_mut(Axis(0), b + 1)
                .assign(&h.mapv(|v| v as f32));
        }
        LayerFeatureStack::new(layers, self.spec.stride_ms, waveform.utterance_id.clone(), mode)
    }

    fn parameter_checksum(&self) -> String {
        let mut hasher = Sha256::new();
        let all = std::iter::once(&self.embed).chain(
            self.blocks
                .iter()
                .flat_map(|b| [&b.query, &b.key, &b.value]),
        );
        for m in all {
            for v in m.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}
