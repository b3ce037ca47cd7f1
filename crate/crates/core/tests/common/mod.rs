#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use prosody_probe::data::{
    load_audio, write_wav, DatasetManifest, LabelScheme, Split, SplitName, Task, UtteranceRecord, SAMPLE_RATE,
};
use prosody_probe::prosody::{align_track, extract_pitch};
use prosody_probe::synth::{glide_utterance, harmonic_tone};

pub fn record(id: &str, path: &Path, samples: usize, label: Option<f64>, split: Split) -> UtteranceRecord {
    UtteranceRecord {
        id: id.to_string(),
        audio_path: path.to_path_buf(),
        sample_rate: SAMPLE_RATE,
        duration: samples as f64 / SAMPLE_RATE as f64,
        speaker: None,
        label,
        split,
        language: "en".into(),
    }
}

/// Binary utterance-classification corpus: label 1 for high-pitched tones.
pub fn tone_classification_corpus(dir: &Path, task: Task, count: usize, folds: Option<usize>) -> DatasetManifest {
    std::fs::create_dir_all(dir).unwrap();
    let mut records = Vec::new();
    for i in 0..count {
        let label = i % 2;
        let f0 = if label == 1 { 210.0 + (i % 7) as f64 * 6.0 } else { 110.0 + (i % 5) as f64 * 6.0 };
        let samples = harmonic_tone(f0, 0.5 + (i % 3) as f64 * 0.1, 0.4, 4000.0);
        let id = format!("tone{i:03}");
        let path = dir.join(format!("{id}.wav"));
        write_wav(&path, &samples, SAMPLE_RATE, 1).unwrap();
        let split = match folds {
            Some(k) => Split::Fold(i % k),
            None => Split::Named(match i % 5 {
                3 => SplitName::Dev,
                4 => SplitName::Test,
                _ => SplitName::Train,
            }),
        };
        records.push(record(&id, &path, samples.len(), Some(label as f64), split));
    }
    let scheme = LabelScheme::Binary;
    DatasetManifest::new("tones", task, scheme, records).unwrap()
}

/// Small frame-level corpus of glide utterances.
pub fn glide_corpus(dir: &Path, count: usize, seconds: f64, seed: u64) -> DatasetManifest {
    prosody_probe::synth::write_glide_corpus(dir, count, seconds, seed).unwrap()
}

/// Per-utterance pitch values on a `stride_ms` grid, for planting into a mock layer.
pub fn pitch_signals(manifest: &DatasetManifest, stride_ms: u32) -> Arc<HashMap<String, Vec<f32>>> {
    let hop = (stride_ms * SAMPLE_RATE / 1000) as usize;
    let mut signals = HashMap::new();
    for r in &manifest.records {
        let w = load_audio(r).unwrap();
        let track = extract_pitch(&w, 10).unwrap();
        let aligned = align_track(&track, stride_ms, w.len() / hop).unwrap();
        signals.insert(r.id.clone(), aligned.values);
    }
    Arc::new(signals)
}

pub fn glide_waveform(seed: u64, seconds: f64) -> prosody_probe::data::Waveform {
    let (samples, _) = glide_utterance(seed, seconds, (90.0, 260.0));
    prosody_probe::data::Waveform::new(format!("probe{seed}"), samples)
}

/// Ridge-regularized least squares via normal equations and Cholesky.
pub fn least_squares(rows: &[Vec<f64>], targets: &[f64], ridge: f64) -> Vec<f64> {
    let d = rows[0].len();
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (x, &y) in rows.iter().zip(targets) {
        for i in 0..d {
            b[i] += x[i] * y;
            for j in 0..=i {
                a[i][j] += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        a[i][i] += ridge * rows.len() as f64;
    }
    for j in 0..d {
        let mut s = a[j][j];
        for k in 0..j {
            s -= a[j][k] * a[j][k];
        }
        let diag = s.sqrt();
        a[j][j] = diag;
        for i in j + 1..d {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / diag;
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * y[k];
        }
        y[i] = s / a[i][i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in i + 1..d {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    x
}
