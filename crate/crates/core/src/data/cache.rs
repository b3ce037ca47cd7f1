//! Content-addressed store for feature stacks and prosody tracks.
//!
//! Entry layout: `b"PPC1"`, 32-byte SHA-256 of the payload, u64 payload
//! length, payload. Payloads are versioned and little-endian throughout.
//! Feature payload: `b'F'`, version, mode, stride_ms, L, T, D, id, then
//! L·T·D f32 values. Track payload: `b'P'`, version, kind, hop_ms, T, id,
//! T f32 values, then the voicing mask packed LSB-first.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};
use crate::prosody::{ProsodyKind, ProsodyTrack};
use crate::upstream::{LayerFeatureStack, Mode};

const ENTRY_MAGIC: &[u8; 4] = b"PPC1";
const PAYLOAD_VERSION: u8 = 1;
const TAG_FEATURES: u8 = b'F';
const TAG_TRACK: u8 = b'P';

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub upstream: String,
    pub mode: String,
    pub utterance_id: String,
    pub artifact_kind: String,
    pub extractor_version: String,
}

impl CacheKey {
    pub fn features(upstream: &str, mode: Mode, utterance_id: &str, version: &str) -> Self {
        CacheKey {
            upstream: upstream.to_string(),
            mode: mode.as_str().to_string(),
            utterance_id: utterance_id.to_string(),
            artifact_kind: "features".to_string(),
            extractor_version: version.to_string(),
        }
    }

    pub fn track(kind: ProsodyKind, hop_ms: u32, utterance_id: &str, version: &str) -> Self {
        CacheKey {
            upstream: "prosody".to_string(),
            mode: format!("hop{hop_ms}"),
            utterance_id: utterance_id.to_string(),
            artifact_kind: kind.as_str().to_string(),
            extractor_version: version.to_string(),
        }
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [
            &self.upstream,
            &self.mode,
            &self.utterance_id,
            &self.artifact_kind,
            &self.extractor_version,
        ] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Features(LayerFeatureStack),
    Track(ProsodyTrack),
}

impl From<LayerFeatureStack> for Payload {
    fn from(s: LayerFeatureStack) -> Self {
        Payload::Features(s)
    }
}

impl From<ProsodyTrack> for Payload {
    fn from(t: ProsodyTrack) -> Self {
        Payload::Track(t)
    }
}

#[derive(Debug, Clone)]
pub struct FeatureCache {
    root: PathBuf,
}

impl FeatureCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).at(&root)?;
        Ok(FeatureCache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, key: &CacheKey) -> PathBuf {
        let digest = key.digest();
        self.root.join(&digest[..2]).join(format!("{digest}.bin"))
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.entry_path(key).is_file()
    }

    /// Writes to a temporary file in the target directory and renames it
    /// into place, so readers never observe a partial entry.
    pub fn put(&self, key: &CacheKey, payload: &Payload) -> Result<()> {
        let path = self.entry_path(key);
        let dir = path.parent().expect("entry path has a parent");
        fs::create_dir_all(dir).at(dir)?;
        let bytes = encode_entry(payload);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).at(dir)?;
        tmp.write_all(&bytes).at(tmp.path())?;
        tmp.as_file().sync_all().at(tmp.path())?;
        tmp.persist(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e.error,
        })?;
        Ok(())
    }

    /// `None` on a miss. Corrupted entries are reported as a miss with a warning.
    pub fn get(&self, key: &CacheKey) -> Option<Payload> {
        let path = self.entry_path(key);
        let bytes = fs::read(&path).ok()?;
        match decode_entry(&bytes) {
            Ok(payload) => Some(payload),
            Err(reason) => {
                log::warn!("cache entry {} is corrupted ({reason}); treating as miss", path.display());
                None
            }
        }
    }

    pub fn get_features(&self, key: &CacheKey) -> Option<LayerFeatureStack> {
        match self.get(key)? {
            Payload::Features(s) => Some(s),
            Payload::Track(_) => None,
        }
    }

    pub fn get_track(&self, key: &CacheKey) -> Option<ProsodyTrack> {
        match self.get(key)? {
            Payload::Track(t) => Some(t),
            Payload::Features(_) => None,
        }
    }
}

pub fn encode_entry(payload: &Payload) -> Vec<u8> {
    let body = encode_payload(payload);
    let mut out = Vec::with_capacity(body.len() + 44);
    out.extend_from_slice(ENTRY_MAGIC);
    out.extend_from_slice(&Sha256::digest(&body));
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn decode_entry(bytes: &[u8]) -> Result<Payload, String> {
    if bytes.len() < 44 || &bytes[..4] != ENTRY_MAGIC {
        return Err("bad header".into());
    }
    let checksum = &bytes[4..36];
    let len = u64::from_le_bytes(bytes[36..44].try_into().unwrap()) as usize;
    let body = &bytes[44..];
    if body.len() != len {
        return Err(format!("length {} != header {len}", body.len()));
    }
    if Sha256::digest(body).as_slice() != checksum {
        return Err("checksum mismatch".into());
    }
    decode_payload(body)
}

fn encode_payload(payload: &Payload) -> Vec<u8> {
    let mut out = Vec::new();
    let put_u32 = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    let put_id = |out: &mut Vec<u8>, id: &str| {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    };
    match payload {
        Payload::Features(stack) => {
            let (l, t, d) = stack.layers.dim();
            out.push(TAG_FEATURES);
            out.push(PAYLOAD_VERSION);
            out.push(match stack.mode {
                Mode::Full => 0,
                Mode::Causal => 1,
            });
            put_u32(&mut out, stack.stride_ms);
            put_u32(&mut out, l as u32);
            put_u32(&mut out, t as u32);
            put_u32(&mut out, d as u32);
            put_id(&mut out, &stack.utterance_id);
            out.reserve(l * t * d * 4);
            for v in stack.layers.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Payload::Track(track) => {
            out.push(TAG_TRACK);
            out.push(PAYLOAD_VERSION);
            out.push(match track.kind {
                ProsodyKind::Pitch => 0,
                ProsodyKind::Energy => 1,
            });
            put_u32(&mut out, track.hop_ms);
            put_u32(&mut out, track.values.len() as u32);
            put_id(&mut out, &track.utterance_id);
            for v in &track.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
            let mut packed = vec![0u8; track.voiced.len().div_ceil(8)];
            for (i, &m) in track.voiced.iter().enumerate() {
                if m {
                    packed[i / 8] |= 1 << (i % 8);
                }
            }
            out.extend_from_slice(&packed);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).ok_or("overflow")?;
        let slice = self.bytes.get(self.pos..end).ok_or("truncated payload")?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn id(&mut self) -> Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| e.to_string())
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, String> {
        let raw = self.take(n.checked_mul(4).ok_or("overflow")?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn decode_payload(bytes: &[u8]) -> Result<Payload, String> {
    let mut r = Reader { bytes, pos: 0 };
    let tag = r.u8()?;
    let version = r.u8()?;
    if version != PAYLOAD_VERSION {
        return Err(format!("unsupported payload version {version}"));
    }
    let payload = match tag {
        TAG_FEATURES => {
            let mode = match r.u8()? {
                0 => Mode::Full,
                1 => Mode::Causal,
                m => return Err(format!("bad mode {m}")),
            };
            let stride_ms = r.u32()?;
            let (l, t, d) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            let id = r.id()?;
            let data = r.f32s(l * t * d)?;
            let layers = Array3::from_shape_vec((l, t, d), data).map_err(|e| e.to_string())?;
            Payload::Features(LayerFeatureStack {
                layers,
                stride_ms,
                utterance_id: id,
                mode,
            })
        }
        TAG_TRACK => {
            let kind = match r.u8()? {
                0 => ProsodyKind::Pitch,
                1 => ProsodyKind::Energy,
                k => return Err(format!("bad track kind {k}")),
            };
            let hop_ms = r.u32()?;
            let t = r.u32()? as usize;
            let id = r.id()?;
            let values = r.f32s(t)?;
            let packed = r.take(t.div_ceil(8))?;
            let voiced = (0..t).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
            Payload::Track(ProsodyTrack {
                kind,
                values,
                voiced,
                hop_ms,
                utterance_id: id,
            })
        }
        other => return Err(format!("unknown payload tag {other}")),
    };
    if r.pos != bytes.len() {
        return Err("trailing bytes".into());
    }
    Ok(payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stack(seed: u32) -> LayerFeatureStack {
        let layers = Array3::from_shape_fn((3, 5, 4), |(l, t, d)| {
            (seed as f32 + 0.1 * l as f32 - 0.37 * t as f32 + d as f32).sin()
        });
        LayerFeatureStack::new(layers, 20, format!("utt{seed}"), Mode::Causal).unwrap()
    }

    fn key(id: &str) -> CacheKey {
        CacheKey::features("mock", Mode::Causal, id, "v1")
    }

    #[test]
    fn put_then_get_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::open(dir.path()).unwrap();
        let s = stack(1);
        cache.put(&key("a"), &s.clone().into()).unwrap();
        assert_eq!(cache.get_features(&key("a")).unwrap(), s);
    }

    #[test]
    fn absent_key_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::open(dir.path()).unwrap();
        assert!(cache.get(&key("nothing")).is_none());
    }

    #[test]
    fn last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::open(dir.path()).unwrap();
        cache.put(&key("a"), &stack(1).into()).unwrap();
        cache.put(&key("a"), &stack(2).into()).unwrap();
        assert_eq!(cache.get_features(&key("a")).unwrap(), stack(2));
    }

    #[test]
    fn corrupted_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::open(dir.path()).unwrap();
        cache.put(&key("a"), &stack(1).into()).unwrap();
        let path = cache.entry_path(&key("a"));
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(&path, bytes).unwrap();
        assert!(cache.get(&key("a")).is_none());
    }

    #[test]
    fn distinct_keys_have_distinct_digests() {
        let a = CacheKey::features("x", Mode::Full, "ab", "1");
        let b = CacheKey::features("xa", Mode::Full, "b", "1");
        assert_ne!(a.digest(), b.digest());
    }

    proptest! {
        #[test]
        fn feature_round_trip_is_bit_exact(
            l in 1usize..4, t in 0usize..20, d in 1usize..6,
            vals in proptest::collection::vec(-1e6f32..1e6, 0..480),
        ) {
            let data: Vec<f32> = (0..l * t * d).map(|i| vals.get(i).copied().unwrap_or(i as f32)).collect();
            let s = LayerFeatureStack {
                layers: Array3::from_shape_vec((l, t, d), data).unwrap(),
                stride_ms: 10,
                utterance_id: "ü-id".into(),
                mode: Mode::Full,
            };
            let decoded = decode_entry(&encode_entry(&s.clone().into())).unwrap();
            prop_assert_eq!(decoded, Payload::Features(s));
        }

        #[test]
        fn track_round_trip_is_bit_exact(
            entries in proptest::collection::vec((-10f32..10.0, any::<bool>()), 0..70),
        ) {
            let t = ProsodyTrack {
                kind: ProsodyKind::Pitch,
                values: entries.iter().map(|e| e.0).collect(),
                voiced: entries.iter().map(|e| e.1).collect(),
                hop_ms: 10,
                utterance_id: "x".into(),
            };
            let decoded = decode_entry(&encode_entry(&t.clone().into())).unwrap();
            prop_assert_eq!(decoded, Payload::Track(t));
        }
    }
}
