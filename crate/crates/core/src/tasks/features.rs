use std::sync::Arc;

use crate::data::{load_audio, CacheKey, FeatureCache, Payload, UtteranceRecord};
use crate::error::Result;
use crate::probe::FeatureSource;
use crate::prosody::{align_track, extract_track, ProsodyKind, ProsodyTrack, TARGET_VERSION};
use crate::upstream::{extract_layer_features, LayerFeatureStack, Mode, Upstream};

/// Native hop of extracted prosody tracks before alignment.
pub const TRACK_HOP_MS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Extracted,
    Reused,
}

/// Features and targets for manifest records, read through the cache when one
/// is configured.
pub struct FeatureProvider<'a> {
    upstream: &'a dyn Upstream,
    mode: Mode,
    cache: Option<FeatureCache>,
}

impl<'a> FeatureProvider<'a> {
    pub fn new(upstream: &'a dyn Upstream, mode: Mode, cache: Option<FeatureCache>) -> Self {
        FeatureProvider { upstream, mode, cache }
    }

    pub fn upstream(&self) -> &dyn Upstream {
        self.upstream
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn feature_key(&self, record: &UtteranceRecord) -> CacheKey {
        CacheKey::features(
            &self.upstream.spec().name,
            self.mode,
            &record.id,
            self.upstream.version(),
        )
    }

    pub fn features(&self, record: &UtteranceRecord) -> Result<(LayerFeatureStack, Provenance)> {
        let key = self.feature_key(record);
        if let Some(stack) = self.cache.as_ref().and_then(|c| c.get_features(&key)) {
            return Ok((stack, Provenance::Reused));
        }
        let waveform = load_audio(record)?;
        let stack = extract_layer_features(self.upstream, &waveform, self.mode)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &Payload::Features(stack.clone()))?;
        }
        Ok((stack, Provenance::Extracted))
    }

    /// A handle to the record's features plus their frame count. With a cache
    /// the handle re-reads from disk on use; otherwise it holds the stack.
    pub fn source(&self, record: &UtteranceRecord) -> Result<(FeatureSource, LayerFeatureStack)> {
        let (stack, _) = self.features(record)?;
        let source = match &self.cache {
            Some(cache) => FeatureSource::Cached {
                cache: cache.clone(),
                key: self.feature_key(record),
            },
            None => FeatureSource::Memory(Arc::new(stack.clone())),
        };
        Ok((source, stack))
    }

    /// The record's prosody track at [`TRACK_HOP_MS`].
    pub fn track(&self, record: &UtteranceRecord, kind: ProsodyKind) -> Result<(ProsodyTrack, Provenance)> {
        let key = CacheKey::track(kind, TRACK_HOP_MS, &record.id, TARGET_VERSION);
        if let Some(track) = self.cache.as_ref().and_then(|c| c.get_track(&key)) {
            return Ok((track, Provenance::Reused));
        }
        let waveform = load_audio(record)?;
        let track = extract_track(&waveform, kind, TRACK_HOP_MS)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &Payload::Track(track.clone()))?;
        }
        Ok((track, Provenance::Extracted))
    }

    /// The record's track aligned to the upstream frame grid.
    pub fn aligned_track(
        &self,
        record: &UtteranceRecord,
        kind: ProsodyKind,
        num_frames: usize,
    ) -> Result<ProsodyTrack> {
        let (track, _) = self.track(record, kind)?;
        align_track(&track, self.upstream.spec().stride_ms, num_frames)
    }
}
