//! Frozen feature extractors behind a uniform adapter.
//!
//! Layer 0 is the earliest exposed representation (the post-convolution
//! projection for transformer models); layers `1..L` are block outputs.

use serde::{Deserialize, Serialize};

use crate::data::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

pub mod catalog;
pub mod causality;
pub mod fbank;
pub mod mock;
pub mod precomputed;
pub mod registry;
mod stack;
pub mod transformer;

pub use causality::{assert_causality, future_perturbation_test, CausalityReport, CAUSALITY_TOLERANCE};
pub use fbank::Fbank;
pub use mock::{MockUpstream, PlantedLayer};
pub use precomputed::{write_precomputed, Precomputed};
pub use registry::{RegistryEntry, UpstreamRegistry};
pub use stack::{LayerFeatureStack, Mode};
pub use transformer::MockTransformer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpstreamSpec {
    pub name: String,
    pub num_layers: usize,
    pub dim: usize,
    pub stride_ms: u32,
    pub causal_capable: bool,
    #[serde(default)]
    pub checkpoint_ref: String,
}

impl UpstreamSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Upstream {
            upstream: self.name.clone(),
            message,
        };
        if self.stride_ms != 10 && self.stride_ms != 20 {
            return Err(bad(format!("stride must be 10 or 20 ms, got {}", self.stride_ms)));
        }
        if self.num_layers == 0 || self.dim == 0 {
            return Err(bad("layer count and dim must be positive".into()));
        }
        Ok(())
    }

    pub fn hop_samples(&self) -> usize {
        (self.stride_ms * SAMPLE_RATE / 1000) as usize
    }
}

/// A frozen upstream. Implementations take `&self`, so extraction cannot
/// mutate parameters; `parameter_checksum` lets callers verify it.
pub trait Upstream: Send + Sync {
    fn spec(&self) -> &UpstreamSpec;

    /// Raw extraction; callers go through [`extract_layer_features`].
    fn extract(&self, waveform: &Waveform, mode: Mode) -> Result<LayerFeatureStack>;

    fn parameter_checksum(&self) -> String;

    /// Bumped whenever the extractor's numerics change; part of cache keys.
    fn version(&self) -> &str {
        "1"
    }
}

/// Extracts layerwise features, enforcing the causal-mode and shape contracts.
pub fn extract_layer_features(
    upstream: &dyn Upstream,
    waveform: &Waveform,
    mode: Mode,
) -> Result<LayerFeatureStack> {
    let spec = upstream.spec();
    if mode == Mode::Causal && !spec.causal_capable {
        return Err(Error::NotCausal(spec.name.clone()));
    }
    if waveform.len() < spec.hop_samples() {
        return Err(Error::TooShort {
            what: "upstream frame",
            samples: waveform.len(),
            window: spec.hop_samples(),
        });
    }
    let stack = upstream.extract(waveform, mode)?;
    stack.validate()?;
    if stack.num_layers() != spec.num_layers || stack.dim() != spec.dim {
        return Err(Error::Upstream {
            upstream: spec.name.clone(),
            message: format!(
                "expected {} layers × {} dims, got {} × {}",
                spec.num_layers,
                spec.dim,
                stack.num_layers(),
                stack.dim()
            ),
        });
    }
    if stack.stride_ms != spec.stride_ms || stack.mode != mode {
        return Err(Error::Upstream {
            upstream: spec.name.clone(),
            message: "stride or mode of extracted features disagrees with the spec".into(),
        });
    }
    Ok(stack)
}
