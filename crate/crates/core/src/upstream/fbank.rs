//! 80-band log mel filterbank with delta and delta-delta (240 dims, 10 ms).

use ndarray::{Array2, Array3, Axis};
use sha2::{Digest, Sha256};

use crate::data::{Waveform, SAMPLE_RATE};
use crate::dsp::{causal_start, centered_start, fill_window, hamming, num_frames, Spectrum};
use crate::error::{Error, Result};
use crate::upstream::{LayerFeatureStack, Mode, Upstream, UpstreamSpec};

pub const N_MELS: usize = 80;
pub const FBANK_DIM: usize = 3 * N_MELS;
pub const WIN_LENGTH: usize = 400;
pub const HOP_LENGTH: usize = 160;
pub const N_FFT: usize = 512;
pub const LOG_FLOOR: f64 = 1e-10;
pub const DELTA_WINDOW: usize = 2;

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale, shape (n_mels, n_fft/2 + 1).
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: f64) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    Array2::from_shape_fn((n_mels, n_bins), |(m, k)| {
        let f = k as f64 * sample_rate / n_fft as f64;
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        if f > lo && f < mid {
            (f - lo) / (mid - lo)
        } else if f >= mid && f < hi {
            (hi - f) / (hi - mid)
        } else {
            0.0
        }
    })
}

/// Regression deltas over ±[`DELTA_WINDOW`] frames with edge replication.
///
/// In causal mode the regression for frame t is centered on t − window, so
/// it only reads frames up to t.
pub fn deltas(feats: &Array2<f64>, mode: Mode) -> Array2<f64> {
    let t_len = feats.nrows();
    let n = DELTA_WINDOW as isize;
    let denom: f64 = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let clamp = |i: isize| i.clamp(0, t_len as isize - 1) as usize;
    let mut out = Array2::zeros(feats.raw_dim());
    for t in 0..t_len {
        let center = match mode {
            Mode::Full => t as isize,
            Mode::Causal => t as isize - n,
        };
        let mut row = out.row_mut(t);
        for k in 1..=n {
            let plus = feats.row(clamp(center + k));
            let minus = feats.row(clamp(center - k));
            row.scaled_add(k as f64 / denom, &(&plus - &minus));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Fbank {
    spec: UpstreamSpec,
    filters: Array2<f64>,
    window: Vec<f64>,
}

impl Default for Fbank {
    fn default() -> Self {
        Self::new()
    }
}

impl Fbank {
    pub fn new() -> Self {
        Fbank {
            spec: UpstreamSpec {
                name: "fbank".into(),
                num_layers: 1,
                dim: FBANK_DIM,
                stride_ms: 10,
                causal_capable: true,
                checkpoint_ref: String::new(),
            },
            filters: mel_filterbank(N_MELS, N_FFT, SAMPLE_RATE as f64),
            window: hamming(WIN_LENGTH),
        }
    }

    /// Log mel energies, shape (frames, 80).
    pub fn log_mel(&self, samples: &[f32], mode: Mode) -> Result<Array2<f64>> {
        if samples.len() < WIN_LENGTH {
            return Err(Error::TooShort {
                what: "fbank analysis",
                samples: samples.len(),
                window: WIN_LENGTH,
            });
        }
        let t_len = num_frames(samples.len(), HOP_LENGTH);
        let mut spectrum = Spectrum::new(N_FFT);
        let mut frame = vec![0.0; WIN_LENGTH];
        let mut power = vec![0.0; N_FFT / 2 + 1];
        let mut out = Array2::zeros((t_len, N_MELS));
        for t in 0..t_len {
            let start = match mode {
                Mode::Full => centered_start(t, HOP_LENGTH, WIN_LENGTH),
                Mode::Causal => causal_start(t, HOP_LENGTH, WIN_LENGTH),
            };
            fill_window(samples, start, &mut frame);
            for (x, w) in frame.iter_mut().zip(&self.window) {
                *x *= w;
            }
            spectrum.power(&frame, &mut power);
            for (m, filter) in self.filters.axis_iter(Axis(0)).enumerate() {
                let energy: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
                out[[t, m]] = energy.max(LOG_FLOOR).ln();
            }
        }
        Ok(out)
    }
}

impl Upstream for Fbank {
    fn spec(&self) -> &UpstreamSpec {
        &self.spec
    }

    fn extract(&self, waveform: &Waveform, mode: Mode) -> Result<LayerFeatureStack> {
        let mel = self.log_mel(&waveform.samples, mode)?;
        let d1 = deltas(&mel, mode);
        let d2 = deltas(&d1, mode);
        let t_len = mel.nrows();
        let mut layers = Array3::<f32>::zeros((1, t_len, FBANK_DIM));
        for t in 0..t_len {
            for (block, src) in [&mel, &d1, &d2].into_iter().enumerate() {
                for m in 0..N_MELS {
                    layers[[0, t, block * N_MELS + m]] = src[[t, m]] as f32;
                }
            }
        }
        LayerFeatureStack::new(layers, self.spec.stride_ms, waveform.utterance_id.clone(), mode)
    }

    fn parameter_checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.filters.iter().chain(&self.window) {
            hasher.update(v.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
