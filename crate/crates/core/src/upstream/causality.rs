//! Future-perturbation test: replace every sample after a cut frame with
//! noise and measure how much the outputs at or before the cut move.

use ndarray::{s, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Waveform, SAMPLE_RATE};
use crate::error::Result;
use crate::upstream::{extract_layer_features, Mode, Upstream};

pub const CAUSALITY_TOLERANCE: f64 = 1e-5;
const PERTURBATION_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub subject: String,
    pub cut_frames: Vec<usize>,
    /// Max |Δ| over frames `0..=cut` for each cut.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CausalityReport {
    fn failed(subject: &str, note: String) -> Self {
        CausalityReport {
            subject: subject.to_string(),
            cut_frames: Vec::new(),
            deviations: Vec::new(),
            max_deviation: f64::INFINITY,
            tolerance: CAUSALITY_TOLERANCE,
            passed: false,
            note: Some(note),
        }
    }
}

/// Cut points at 1/4, 1/2 and 3/4 of the frame count.
pub fn default_cut_frames(num_frames: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = [1, 2, 3].iter().map(|q| q * num_frames / 4).collect();
    cuts.dedup();
    cuts
}

/// Runs the perturbation test against any frame-synchronous system. `run`
/// maps audio to an (L, T, D) array; frame `t` owns samples
/// `[t·hop, (t+1)·hop)` with `hop = stride_ms · 16`.
pub fn future_perturbation_test<F>(
    subject: &str,
    run: F,
    probe: &Waveform,
    stride_ms: u32,
) -> Result<CausalityReport>
where
    F: Fn(&Waveform) -> Result<Array3<f32>>,
{
    let hop = (stride_ms * SAMPLE_RATE / 1000) as usize;
    let reference = run(probe)?;
    let t_len = reference.shape()[1];
    let cuts = default_cut_frames(t_len);
    if t_len < 4 || cuts.len() < 3 {
        return Ok(CausalityReport::failed(
            subject,
            format!("probe audio yields only {t_len} frames; need at least 4"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
    let mut deviations = Vec::with_capacity(cuts.len());
    for &cut in &cuts {
        let mut perturbed = probe.clone();
        for x in &mut perturbed.samples[((cut + 1) * hop).min(probe.len())..] {
            *x = rng.random_range(-1.0..1.0);
        }
        let out = run(&perturbed)?;
        let past = s![.., ..=cut, ..];
        let dev = reference
            .slice(past)
            .iter()
            .zip(out.slice(past).iter())
            .map(|(a, b)| (a - b).abs() as f64)
            .fold(0.0, f64::max);
        deviations.push(dev);
    }
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(CausalityReport {
        subject: subject.to_string(),
        cut_frames: cuts,
        deviations,
        max_deviation,
        tolerance: CAUSALITY_TOLERANCE,
        passed: max_deviation < CAUSALITY_TOLERANCE,
        note: None,
    })
}

/// Future-perturbation test of an upstream in causal mode. Never errors:
/// extraction failures and non-causal upstreams yield a failing report.
pub fn assert_causality(upstream: &dyn Upstream, probe_audio: &Waveform) -> CausalityReport {
    let spec = upstream.spec();
    if !spec.causal_capable {
        return CausalityReport::failed(&spec.name, "upstream is not causal-capable".into());
    }
    let run = |w: &Waveform| extract_layer_features(upstream, w, Mode::Causal).map(|s| s.layers);
    future_perturbation_test(&spec.name, run, probe_audio, spec.stride_ms)
        .unwrap_or_else(|e| CausalityReport::failed(&spec.name, e.to_string()))
}
