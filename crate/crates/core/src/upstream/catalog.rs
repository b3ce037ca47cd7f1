//! Metadata for the upstream models covered by the benchmark.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Input {
    Fbank,
    Waveform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub display_name: &'static str,
    pub network: &'static str,
    /// Millions of parameters, pre-training plus inference.
    pub params_m: f64,
    pub stride_ms: u32,
    pub input: Input,
    pub corpus: &'static str,
    pub pretraining: &'static str,
    /// Usable for future value prediction: causal by construction, or
    /// attention-based with a mask that matches training.
    pub causal_capable: bool,
    /// (exposed layers, dim) for architectures with a fixed public layout.
    pub layout: Option<(usize, usize)>,
}

macro_rules! entry {
    ($name:expr, $display:expr, $net:expr, $params:expr, $stride:expr, $input:ident, $corpus:expr, $pre:expr, $causal:expr, $layout:expr) => {
        CatalogEntry {
            name: $name,
            display_name: $display,
            network: $net,
            params_m: $params,
            stride_ms: $stride,
            input: Input::$input,
            corpus: $corpus,
            pretraining: $pre,
            causal_capable: $causal,
            layout: $layout,
        }
    };
}

pub const CATALOG: &[CatalogEntry] = &[
    entry!("fbank", "FBANK", "-", 0.0, 10, Waveform, "-", "-", true, Some((1, 240))),
    entry!("apc", "APC", "3-GRU", 4.11, 10, Fbank, "LS 360 hr", "F-G", true, None),
    entry!("vq_apc", "VQ-APC", "3-GRU", 4.63, 10, Fbank, "LS 360 hr", "F-G + VQ", false, None),
    entry!("npc", "NPC", "4-Conv, 4-Masked Conv", 19.38, 10, Fbank, "LS 360 hr", "M-G + VQ", false, None),
    entry!("mockingjay", "Mockingjay", "12-Trans", 85.12, 10, Fbank, "LS 360 hr", "time M-G", true, Some((13, 768))),
    entry!("tera", "TERA", "3-Trans", 21.33, 10, Fbank, "LS 960 hr", "time/freq M-G", false, Some((4, 768))),
    entry!("modified_cpc", "modified CPC", "5-Conv, 1-LSTM", 1.84, 10, Waveform, "LL 60k hr", "F-C", true, None),
    entry!("wav2vec", "wav2vec", "19-Conv", 32.54, 10, Waveform, "LS 960 hr", "F-C", true, None),
    entry!("vq_wav2vec", "vq-wav2vec", "20-Conv", 34.15, 10, Waveform, "LS 960 hr", "F-C + VQ", false, None),
    entry!("distilhubert", "DistilHuBERT", "7-Conv 2-Trans", 23.49, 20, Waveform, "LS 960 hr", "KD", false, Some((3, 768))),
    entry!("wav2vec2_base", "wav2vec 2.0 Base", "7-Conv 12-Trans", 95.04, 20, Waveform, "LS 960 hr", "M-C + VQ", true, Some((13, 768))),
    entry!("wav2vec2_large", "wav2vec 2.0 Large", "7-Conv 24-Trans", 317.38, 20, Waveform, "LL 60k hr", "M-C + VQ", true, Some((25, 1024))),
    entry!("hubert_base", "HuBERT Base", "7-Conv 12-Trans", 94.68, 20, Waveform, "LS 960 hr", "M-P + VQ", true, Some((13, 768))),
    entry!("hubert_large", "HuBERT Large", "7-Conv 24-Trans", 316.61, 20, Waveform, "LL 60k hr", "M-P + VQ", true, Some((25, 1024))),
    // Gated relative position bias: masking attention alone would not match training.
    entry!("wavlm_base", "WavLM Base", "7-Conv 12-Trans", 94.68, 20, Waveform, "LL 60k hr", "M-P + VQ", false, Some((13, 768))),
    entry!("wavlm_large", "WavLM Large", "7-Conv 24-Trans", 316.62, 20, Waveform, "Mix 94k hr", "M-P + VQ", false, Some((25, 1024))),
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_10_or_20() {
        assert!(CATALOG.iter().all(|e| e.stride_ms == 10 || e.stride_ms == 20));
        assert_eq!(CATALOG.len(), 16);
    }

    #[test]
    fn wavlm_is_excluded_from_causal_use() {
        assert!(!lookup("wavlm_base").unwrap().causal_capable);
        assert!(lookup("hubert_large").unwrap().causal_capable);
    }
}
