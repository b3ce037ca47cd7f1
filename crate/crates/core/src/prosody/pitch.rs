//! YAAPT-style f0 tracker.
//!
//! Per frame, temporal candidates come from peaks of the normalized
//! cross-correlation (NCCF) of the signal. A spectral estimate from the
//! spectral harmonics correlation (SHC) of the squared signal anchors the
//! candidates against octave errors. A Viterbi pass over {candidates,
//! unvoiced} picks the final track, penalizing log-frequency jumps and
//! voicing flips.

use crate::data::{Waveform, SAMPLE_RATE};
use crate::dsp::{centered_start, fill_window, hann, num_frames, Spectrum};
use crate::error::{Error, Result};
use crate::prosody::{ProsodyKind, ProsodyTrack, UNVOICED_SENTINEL};

#[derive(Debug, Clone, PartialEq)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    /// NCCF integration window and SHC analysis window, in ms.
    pub frame_ms: f64,
    pub nfft: usize,
    /// Harmonics multiplied in the SHC product.
    pub shc_harmonics: usize,
    pub shc_window_hz: f64,
    /// Mean harmonic product below which the spectral estimate is ignored.
    pub shc_floor: f64,
    /// NCCF peaks below this never become candidates.
    pub nccf_floor: f64,
    pub max_candidates: usize,
    /// Local cost of declaring a frame unvoiced.
    pub unvoiced_cost: f64,
    /// Cost per unit of |ln(f_a / f_b)| between consecutive voiced frames.
    pub jump_weight: f64,
    pub voicing_flip_cost: f64,
    /// Cost of a full octave disagreement with the spectral estimate.
    pub spectral_weight: f64,
    /// Cost at the longest lag, scaled linearly; breaks ties toward short lags.
    pub lag_weight: f64,
    /// Frames quieter than this fraction of the loudest frame are unvoiced.
    pub relative_energy_floor: f64,
    pub absolute_energy_floor: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            f0_min: 60.0,
            f0_max: 500.0,
            frame_ms: 35.0,
            nfft: 8192,
            shc_harmonics: 4,
            shc_window_hz: 40.0,
            shc_floor: 0.01,
            nccf_floor: 0.3,
            max_candidates: 5,
            unvoiced_cost: 0.5,
            jump_weight: 1.0,
            voicing_flip_cost: 0.2,
            spectral_weight: 0.5,
            lag_weight: 0.05,
            relative_energy_floor: 0.01,
            absolute_energy_floor: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    f0: f64,
    cost: f64,
}

pub struct PitchTracker {
    config: PitchConfig,
    frame_len: usize,
    min_lag: usize,
    max_lag: usize,
    window: Vec<f64>,
    spectrum: Spectrum,
}

impl PitchTracker {
    pub fn new(config: PitchConfig) -> Self {
        let fs = SAMPLE_RATE as f64;
        let frame_len = (config.frame_ms * fs / 1000.0).round() as usize;
        let min_lag = (fs / config.f0_max).floor().max(2.0) as usize;
        let max_lag = (fs / config.f0_min).ceil() as usize;
        PitchTracker {
            frame_len,
            min_lag,
            max_lag,
            window: hann(frame_len),
            spectrum: Spectrum::new(config.nfft),
            config,
        }
    }

    pub fn config(&self) -> &PitchConfig {
        &self.config
    }

    /// Samples needed for a single analysis frame.
    pub fn analysis_window(&self) -> usize {
        self.frame_len
    }

    /// Returns per-frame f0 in Hz, `None` where unvoiced.
    pub fn track(&mut self, samples: &[f32], hop: usize) -> Result<Vec<Option<f64>>> {
        if samples.len() < self.frame_len {
            return Err(Error::TooShort {
                what: "pitch analysis",
                samples: samples.len(),
                window: self.frame_len,
            });
        }
        let t_len = num_frames(samples.len(), hop);
        let rms: Vec<f64> = (0..t_len).map(|t| self.frame_rms(samples, t, hop)).collect();
        let loudest = rms.iter().copied().fold(0.0, f64::max);
        let energy_floor = (loudest * self.config.relative_energy_floor)
            .max(self.config.absolute_energy_floor);
        let audible: Vec<bool> = rms.iter().map(|&r| r >= energy_floor).collect();

        let spectral: Vec<Option<f64>> = (0..t_len)
            .map(|t| audible[t].then(|| self.spectral_estimate(samples, t, hop)).flatten())
            .collect();
        let spectral = smooth_log_track(&spectral, 3);

        let candidates: Vec<Vec<Candidate>> = (0..t_len)
            .map(|t| {
                if audible[t] {
                    self.temporal_candidates(samples, t, hop, spectral[t])
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(self.viterbi(&candidates))
    }

    fn frame_rms(&self, samples: &[f32], t: usize, hop: usize) -> f64 {
        let mut buf = vec![0.0; self.frame_len];
        fill_window(samples, centered_start(t, hop, self.frame_len), &mut buf);
        (buf.iter().map(|x| x * x).sum::<f64>() / self.frame_len as f64).sqrt()
    }

    /// SHC argmax over the f0 search range, on the spectrum of the squared
    /// (mean-removed) signal. `None` when the harmonic evidence is too weak,
    /// as for a pure sinusoid whose square has no component at f0.
    fn spectral_estimate(&mut self, samples: &[f32], t: usize, hop: usize) -> Option<f64> {
        let mut frame = vec![0.0; self.frame_len];
        fill_window(samples, centered_start(t, hop, self.frame_len), &mut frame);
        for x in &mut frame {
            *x *= *x;
        }
        let mean = frame.iter().sum::<f64>() / frame.len() as f64;
        for (x, w) in frame.iter_mut().zip(&self.window) {
            *x = (*x - mean) * w;
        }
        let nfft = self.spectrum.n_fft();
        let mut mag = vec![0.0; nfft / 2 + 1];
        self.spectrum.magnitude(&frame, &mut mag);
        let peak = mag.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return None;
        }
        for m in &mut mag {
            *m /= peak;
        }
        let df = SAMPLE_RATE as f64 / nfft as f64;
        let half = (self.config.shc_window_hz / 2.0 / df).round() as isize;
        let lo = (self.config.f0_min / df).ceil() as usize;
        let hi = (self.config.f0_max / df).floor() as usize;
        let bin = |i: isize| -> f64 {
            if i >= 0 && (i as usize) < mag.len() {
                mag[i as usize]
            } else {
                0.0
            }
        };
        let mut best = (0.0, None);
        for k in lo..=hi {
            let mut shc = 0.0;
            for delta in -half..=half {
                let mut product = 1.0;
                for r in 1..=self.config.shc_harmonics as isize {
                    product *= bin(r * k as isize + delta);
                }
                shc += product;
            }
            if shc > best.0 {
                best = (shc, Some(k as f64 * df));
            }
        }
        if best.0 / ((2 * half + 1) as f64) < self.config.shc_floor {
            return None;
        }
        best.1
    }

    fn temporal_candidates(
        &self,
        samples: &[f32],
        t: usize,
        hop: usize,
        spectral: Option<f64>,
    ) -> Vec<Candidate> {
        let n = self.frame_len;
        let span = n + self.max_lag + 1;
        let mut seg = vec![0.0; span];
        let start = centered_start(t, hop, n) - (self.max_lag / 2) as isize;
        fill_window(samples, start, &mut seg);
        let mean = seg.iter().sum::<f64>() / span as f64;
        for x in &mut seg {
            *x -= mean;
        }
        let e0: f64 = seg[..n].iter().map(|x| x * x).sum();
        let lo = self.min_lag - 1;
        let hi = self.max_lag + 1;
        let mut nccf = vec![0.0; hi + 1];
        let mut ek: f64 = seg[lo..lo + n].iter().map(|x| x * x).sum();
        for k in lo..=hi {
            if k > lo {
                ek += seg[k + n - 1] * seg[k + n - 1] - seg[k - 1] * seg[k - 1];
            }
            let denom = (e0 * ek.max(0.0)).sqrt();
            if denom > 1e-12 {
                let num: f64 = seg[..n].iter().zip(&seg[k..k + n]).map(|(a, b)| a * b).sum();
                nccf[k] = num / denom;
            }
        }

        let fs = SAMPLE_RATE as f64;
        let mut found = Vec::new();
        for k in self.min_lag..=self.max_lag {
            let (a, b, c) = (nccf[k - 1], nccf[k], nccf[k + 1]);
            if b < self.config.nccf_floor || b < a || b < c {
                continue;
            }
            let curvature = a - 2.0 * b + c;
            let offset = if curvature < 0.0 {
                (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            let lag = k as f64 + offset;
            let merit = (b - 0.25 * (a - c) * offset).min(1.0);
            let f0 = fs / lag;
            if f0 < self.config.f0_min || f0 > self.config.f0_max {
                continue;
            }
            let mut cost = 1.0 - merit + self.config.lag_weight * lag / self.max_lag as f64;
            if let Some(fs_est) = spectral {
                let octaves = ((f0 / fs_est).ln().abs() / std::f64::consts::LN_2).min(1.0);
                cost += self.config.spectral_weight * octaves;
            }
            found.push(Candidate { f0, cost });
        }
        found.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        found.truncate(self.config.max_candidates);
        found
    }

    fn viterbi(&self, candidates: &[Vec<Candidate>]) -> Vec<Option<f64>> {
        let cfg = &self.config;
        // State 0 is unvoiced; state j + 1 is candidate j.
        let mut cost: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(candidates.len());
        for (t, cands) in candidates.iter().enumerate() {
            let local: Vec<f64> = std::iter::once(cfg.unvoiced_cost)
                .chain(cands.iter().map(|c| c.cost))
                .collect();
            if t == 0 {
                cost.push(local);
                back.push(vec![0; cands.len() + 1]);
                continue;
            }
            let prev_cands = &candidates[t - 1];
            let prev_cost = &cost[t - 1];
            let mut row = Vec::with_capacity(local.len());
            let mut brow = Vec::with_capacity(local.len());
            for (s, &lc) in local.iter().enumerate() {
                let mut best = (f64::INFINITY, 0);
                for (p, &pc) in prev_cost.iter().enumerate() {
                    let trans = match (p, s) {
                        (0, 0) => 0.0,
                        (0, _) | (_, 0) => cfg.voicing_flip_cost,
                        (p, s) => {
                            cfg.jump_weight * (cands[s - 1].f0 / prev_cands[p - 1].f0).ln().abs()
                        }
                    };
                    if pc + trans < best.0 {
                        best = (pc + trans, p);
                    }
                }
                row.push(best.0 + lc);
                brow.push(best.1);
            }
            cost.push(row);
            back.push(brow);
        }
        let mut out = vec![None; candidates.len()];
        let Some(last) = cost.last() else { return out };
        let mut state = last
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        for t in (0..candidates.len()).rev() {
            if state > 0 {
                out[t] = Some(candidates[t][state - 1].f0);
            }
            state = back[t][state];
        }
        out
    }
}

/// Running median of ln f over ±`radius` frames, skipping gaps.
fn smooth_log_track(track: &[Option<f64>], radius: usize) -> Vec<Option<f64>> {
    (0..track.len())
        .map(|t| {
            track[t]?;
            let lo = t.saturating_sub(radius);
            let hi = (t + radius + 1).min(track.len());
            let mut logs: Vec<f64> = track[lo..hi].iter().flatten().map(|f| f.ln()).collect();
            logs.sort_by(f64::total_cmp);
            Some(logs[logs.len() / 2].exp())
        })
        .collect()
}

/// Natural-log f0 with a voicing mask, using the default tracker settings.
pub fn extract_pitch(waveform: &Waveform, hop_ms: u32) -> Result<ProsodyTrack> {
    extract_pitch_with(waveform, hop_ms, PitchConfig::default())
}

pub fn extract_pitch_with(
    waveform: &Waveform,
    hop_ms: u32,
    config: PitchConfig,
) -> Result<ProsodyTrack> {
    let hop = (hop_ms * SAMPLE_RATE / 1000) as usize;
    let f0 = PitchTracker::new(config).track(&waveform.samples, hop)?;
    let values = f0
        .iter()
        .map(|f| f.map_or(UNVOICED_SENTINEL, |f| f.ln() as f32))
        .collect();
    let voiced = f0.iter().map(Option::is_some).collect();
    ProsodyTrack::new(
        ProsodyKind::Pitch,
        values,
        voiced,
        hop_ms,
        waveform.utterance_id.clone(),
    )
}
