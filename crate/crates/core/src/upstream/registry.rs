//! Name → adapter registry, loadable from a TOML file:
//!
//! ```toml
//! [[upstream]]
//! name = "hubert_base"
//! adapter = "precomputed"
//! checkpoint_ref = "/data/features/hubert_base"
//! stride_ms = 20
//! num_layers = 13
//! dim = 768
//! causal_capable = true
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::upstream::catalog::CATALOG;
use crate::upstream::{Fbank, MockTransformer, MockUpstream, Precomputed, Upstream, UpstreamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adapter {
    Fbank,
    Precomputed,
    Mock,
    MockTransformer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    pub adapter: Adapter,
    #[serde(default)]
    pub checkpoint_ref: String,
    pub stride_ms: u32,
    pub num_layers: usize,
    pub dim: usize,
    pub causal_capable: bool,
    #[serde(default)]
    pub seed: u64,
}

impl RegistryEntry {
    pub fn spec(&self) -> UpstreamSpec {
        UpstreamSpec {
            name: self.name.clone(),
            num_layers: self.num_layers,
            dim: self.dim,
            stride_ms: self.stride_ms,
            causal_capable: self.causal_capable,
            checkpoint_ref: self.checkpoint_ref.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    upstream: Vec<RegistryEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct UpstreamRegistry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl UpstreamRegistry {
    /// FBANK plus catalog models with a fixed layout, expecting exported
    /// features under `features/<name>` unless overridden by a config file.
    pub fn with_builtins() -> Self {
        let mut registry = UpstreamRegistry::default();
        for e in CATALOG {
            let Some((num_layers, dim)) = e.layout else { continue };
            let adapter = if e.name == "fbank" {
                Adapter::Fbank
            } else {
                Adapter::Precomputed
            };
            registry.insert(RegistryEntry {
                name: e.name.to_string(),
                adapter,
                checkpoint_ref: if adapter == Adapter::Fbank {
                    String::new()
                } else {
                    format!("features/{}", e.name)
                },
                stride_ms: e.stride_ms,
                num_layers,
                dim,
                causal_capable: e.causal_capable,
                seed: 0,
            });
        }
        registry
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: RegistryFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("registry: {e}")))?;
        let mut registry = Self::with_builtins();
        for entry in file.upstream {
            entry.spec().validate()?;
            registry.insert(entry);
        }
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path).at(path)?)
    }

    pub fn insert(&mut self, entry: RegistryEntry) {
        self.entries.insert(entry.name.clone(), entry);
    }

    pub fn entry(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownUpstream(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn instantiate(&self, name: &str) -> Result<Box<dyn Upstream>> {
        let e = self.entry(name)?;
        Ok(match e.adapter {
            Adapter::Fbank => Box::new(Fbank::new()),
            Adapter::Precomputed => Box::new(Precomputed::new(e.spec())),
            Adapter::Mock => Box::new(MockUpstream::new(
                &e.name,
                e.num_layers,
                e.dim,
                e.stride_ms,
                e.seed,
            )),
            Adapter::MockTransformer => Box::new(MockTransformer::new(
                &e.name,
                e.num_layers.saturating_sub(1),
                e.dim,
                e.stride_ms,
                e.seed,
            )),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config_file() {
        let registry = UpstreamRegistry::from_toml_str(
            r#"
            [[upstream]]
            name = "hubert_base"
            adapter = "precomputed"
            checkpoint_ref = "/feats/hubert"
            stride_ms = 20
            num_layers = 13
            dim = 768
            causal_capable = true

            [[upstream]]
            name = "toy"
            adapter = "mock-transformer"
            stride_ms = 20
            num_layers = 3
            dim = 8
            causal_capable = true
            seed = 4
            "#,
        )
        .unwrap();
        assert_eq!(registry.entry("hubert_base").unwrap().checkpoint_ref, "/feats/hubert");
        let toy = registry.instantiate("toy").unwrap();
        assert_eq!(toy.spec().num_layers, 3);
        assert!(registry.instantiate("fbank").is_ok());
        assert!(matches!(
            registry.instantiate("nope"),
            Err(Error::UnknownUpstream(_))
        ));
    }

    #[test]
    fn rejects_bad_stride() {
        let err = UpstreamRegistry::from_toml_str(
            r#"
            [[upstream]]
            name = "x"
            adapter = "mock"
            stride_ms = 25
            num_layers = 1
            dim = 1
            causal_capable = true
            "#,
        );
        assert!(err.is_err());
    }
}
