//! Adapter for features exported by external tooling (e.g. hidden states of a
//! pre-trained checkpoint dumped from Python). Files live at
//! `<checkpoint_ref>/<mode>/<utterance_id>.bin` in the cache entry format.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::cache::{decode_entry, encode_entry, Payload};
use crate::data::Waveform;
use crate::error::{Error, IoContext, Result};
use crate::upstream::{LayerFeatureStack, Mode, Upstream, UpstreamSpec};

#[derive(Debug, Clone)]
pub struct Precomputed {
    spec: UpstreamSpec,
}

impl Precomputed {
    pub fn new(spec: UpstreamSpec) -> Self {
        Precomputed { spec }
    }

    pub fn feature_path(root: &Path, mode: Mode, utterance_id: &str) -> PathBuf {
        root.join(mode.as_str()).join(format!("{utterance_id}.bin"))
    }
}

/// Writes one exported stack where [`Precomputed`] will look for it.
pub fn write_precomputed(root: &Path, stack: &LayerFeatureStack) -> Result<PathBuf> {
    let path = Precomputed::feature_path(root, stack.mode, &stack.utterance_id);
    let dir = path.parent().unwrap();
    fs::create_dir_all(dir).at(dir)?;
    fs::write(&path, encode_entry(&Payload::Features(stack.clone()))).at(&path)?;
    Ok(path)
}

impl Upstream for Precomputed {
    fn spec(&self) -> &UpstreamSpec {
        &self.spec
    }

    fn extract(&self, waveform: &Waveform, mode: Mode) -> Result<LayerFeatureStack> {
        let path = Self::feature_path(
            Path::new(&self.spec.checkpoint_ref),
            mode,
            &waveform.utterance_id,
        );
        let bytes = fs::read(&path).map_err(|e| Error::Upstream {
            upstream: self.spec.name.clone(),
            message: format!("cannot load {}: {e}", path.display()),
        })?;
        match decode_entry(&bytes) {
            Ok(Payload::Features(stack)) => Ok(stack),
            Ok(Payload::Track(_)) => Err(Error::Upstream {
                upstream: self.spec.name.clone(),
                message: format!("{} holds a prosody track", path.display()),
            }),
            Err(reason) => Err(Error::Upstream {
                upstream: self.spec.name.clone(),
                message: format!("{}: {reason}", path.display()),
            }),
        }
    }

    fn parameter_checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.spec).unwrap_or_default());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upstream::extract_layer_features;
    use ndarray::Array3;

    #[test]
    fn reads_exported_features_and_reports_missing_ones() {
        let dir = tempfile::tempdir().unwrap();
        let spec = UpstreamSpec {
            name: "ext".into(),
            num_layers: 2,
            dim: 3,
            stride_ms: 20,
            causal_capable: true,
            checkpoint_ref: dir.path().display().to_string(),
        };
        let stack = LayerFeatureStack::new(
            Array3::from_shape_fn((2, 4, 3), |(l, t, d)| (l + t + d) as f32),
            20,
            "u1",
            Mode::Causal,
        )
        .unwrap();
        write_precomputed(dir.path(), &stack).unwrap();
        let up = Precomputed::new(spec);
        let wave = Waveform::new("u1", vec![0.0; 1280]);
        assert_eq!(extract_layer_features(&up, &wave, Mode::Causal).unwrap(), stack);
        let missing = extract_layer_features(&up, &wave, Mode::Full);
        assert!(matches!(missing, Err(Error::Upstream { .. })));
    }
}
