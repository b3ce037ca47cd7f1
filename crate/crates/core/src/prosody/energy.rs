use crate::data::{Waveform, SAMPLE_RATE};
use crate::dsp::{centered_start, fill_window, num_frames};
use crate::error::{Error, Result};
use crate::prosody::{ProsodyKind, ProsodyTrack};

/// 25 ms analysis window.
pub const ENERGY_WINDOW: usize = 400;
pub const ENERGY_FLOOR: f64 = 1e-10;

/// Unfloored per-frame RMS over centered rectangular windows.
pub fn frame_rms(samples: &[f32], hop: usize) -> Vec<f64> {
    let mut window = vec![0.0; ENERGY_WINDOW];
    (0..num_frames(samples.len(), hop))
        .map(|t| {
            fill_window(samples, centered_start(t, hop, ENERGY_WINDOW), &mut window);
            (window.iter().map(|x| x * x).sum::<f64>() / ENERGY_WINDOW as f64).sqrt()
        })
        .collect()
}

/// Natural log of frame RMS, clamped at [`ENERGY_FLOOR`]; voiced everywhere.
pub fn extract_energy(waveform: &Waveform, hop_ms: u32) -> Result<ProsodyTrack> {
    if waveform.len() < ENERGY_WINDOW {
        return Err(Error::TooShort {
            what: "energy analysis",
            samples: waveform.len(),
            window: ENERGY_WINDOW,
        });
    }
    let hop = (hop_ms * SAMPLE_RATE / 1000) as usize;
    let values: Vec<f32> = frame_rms(&waveform.samples, hop)
        .into_iter()
        .map(|r| r.max(ENERGY_FLOOR).ln() as f32)
        .collect();
    let voiced = vec![true; values.len()];
    ProsodyTrack::new(
        ProsodyKind::Energy,
        values,
        voiced,
        hop_ms,
        waveform.utterance_id.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn sine(amplitude: f64, freq: f64, n: usize) -> Vec<f32> {
        (0..n)
            .map(|i| (amplitude * (2.0 * PI * freq * i as f64 / 16000.0).sin()) as f32)
            .collect()
    }

    #[test]
    fn sine_energy_is_log_amplitude_over_root_two() {
        // 200 Hz: the 400-sample window spans exactly 5 periods.
        let track = extract_energy(&Waveform::new("s", sine(0.5, 200.0, 16000)), 10).unwrap();
        let expected = (0.5f64 / 2f64.sqrt()).ln();
        for &v in &track.values[2..track.len() - 2] {
            assert!((v as f64 - expected).abs() < 1e-3, "{v} vs {expected}");
        }
        assert!(track.voiced.iter().all(|&m| m));
    }

    #[test]
    fn silence_sits_at_floor() {
        let track = extract_energy(&Waveform::new("z", vec![0.0; 8000]), 10).unwrap();
        assert!(track.values.iter().all(|&v| v == ENERGY_FLOOR.ln() as f32));
    }

    #[test]
    fn doubling_adds_ln2() {
        let x = sine(0.2, 173.0, 9000);
        let doubled: Vec<f32> = x.iter().map(|v| 2.0 * v).collect();
        let a = frame_rms(&x, 160);
        let b = frame_rms(&doubled, 160);
        for (ra, rb) in a.iter().zip(&b) {
            assert!((rb.ln() - ra.ln() - LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short() {
        assert!(extract_energy(&Waveform::new("x", vec![0.1; 100]), 10).is_err());
    }
}
