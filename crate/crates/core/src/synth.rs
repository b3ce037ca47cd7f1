//! Deterministic synthetic speech-like signals for tests and demos.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{write_wav, DatasetManifest, LabelScheme, Split, SplitName, Task, UtteranceRecord, SAMPLE_RATE};
use crate::error::Result;

/// Sum of harmonics `k · f0` with 1/k amplitudes up to `max_freq`.
pub fn harmonic_tone(f0: f64, seconds: f64, amplitude: f64, max_freq: f64) -> Vec<f32> {
    let n = (seconds * SAMPLE_RATE as f64).round() as usize;
    let sr = SAMPLE_RATE as f64;
    let harmonics = ((max_freq / f0).floor() as usize).max(1);
    let norm: f64 = (1..=harmonics).map(|k| 1.0 / k as f64).sum();
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let s: f64 = (1..=harmonics)
                .map(|k| (2.0 * PI * k as f64 * f0 * t).sin() / k as f64)
                .sum();
            (amplitude * s / norm) as f32
        })
        .collect()
}

pub fn sine(freq: f64, seconds: f64, amplitude: f64) -> Vec<f32> {
    let n = (seconds * SAMPLE_RATE as f64).round() as usize;
    (0..n)
        .map(|i| (amplitude * (2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
        .collect()
}

/// A voiced/unvoiced utterance: harmonic segments with a linearly gliding f0
/// separated by short low-level noise gaps. Returns the samples and the
/// per-sample f0 (0 in gaps).
pub fn glide_utterance(seed: u64, seconds: f64, f0_range: (f64, f64)) -> (Vec<f32>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = SAMPLE_RATE as f64;
    let n = (seconds * sr).round() as usize;
    let mut samples = vec![0.0f32; n];
    let mut f0s = vec![0.0f64; n];
    let mut pos = 0usize;
    let mut phase = vec![0.0f64; 64];
    while pos < n {
        let voiced_len = ((rng.random_range(0.25..0.6)) * sr) as usize;
        let gap_len = ((rng.random_range(0.05..0.15)) * sr) as usize;
        let start_f = rng.random_range(f0_range.0..f0_range.1);
        let end_f = rng.random_range(f0_range.0..f0_range.1);
        let amp = rng.random_range(0.3..0.7);
        let end = (pos + voiced_len).min(n);
        for i in pos..end {
            let frac = (i - pos) as f64 / voiced_len.max(1) as f64;
            let f0 = start_f + (end_f - start_f) * frac;
            let harmonics = ((4000.0 / f0) as usize).clamp(1, phase.len());
            let mut s = 0.0;
            let mut norm = 0.0;
            for (k, ph) in phase.iter_mut().enumerate().take(harmonics) {
                let kk = (k + 1) as f64;
                *ph = (*ph + 2.0 * PI * kk * f0 / sr) % (2.0 * PI);
                s += ph.sin() / kk;
                norm += 1.0 / kk;
            }
            // Short fades avoid clicks at segment edges.
            let edge = ((i - pos).min(end - 1 - i) as f64 / (0.01 * sr)).min(1.0);
            samples[i] = (amp * edge * s / norm) as f32;
            f0s[i] = f0;
        }
        pos = end;
        let gap_end = (pos + gap_len).min(n);
        for s in &mut samples[pos..gap_end] {
            *s = rng.random_range(-0.003f32..0.003);
        }
        pos = gap_end;
    }
    (samples, f0s)
}

/// Writes `count` glide utterances plus a frame-level manifest (80/10/10
/// train/dev/test) under `dir` and returns the manifest.
pub fn write_glide_corpus(dir: &Path, count: usize, seconds: f64, seed: u64) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|source| crate::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let (samples, _) = glide_utterance(seed.wrapping_mul(1_000_003).wrapping_add(i as u64), seconds, (90.0, 260.0));
        let id = format!("glide{i:04}");
        let path = dir.join(format!("{id}.wav"));
        write_wav(&path, &samples, SAMPLE_RATE, 1)?;
        let split = match i % 10 {
            8 => SplitName::Dev,
            9 => SplitName::Test,
            _ => SplitName::Train,
        };
        records.push(UtteranceRecord {
            id,
            audio_path: path,
            sample_rate: SAMPLE_RATE,
            duration: samples.len() as f64 / SAMPLE_RATE as f64,
            speaker: None,
            label: None,
            split: Split::Named(split),
            language: "en".into(),
        });
    }
    DatasetManifest::new("glide", Task::ProsodyReconstruction, LabelScheme::None, records)
}
