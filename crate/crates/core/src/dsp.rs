//! Framing and spectral helpers shared by the feature extractors.
//!
//! Frame `t` owns samples `[t·hop, (t+1)·hop)`, so an N-sample signal has
//! `N / hop` frames. Centered analysis windows sit on the middle of the
//! owned span; causal windows end where the owned span ends.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub fn num_frames(num_samples: usize, hop: usize) -> usize {
    num_samples / hop
}

/// Start sample (possibly negative) of a centered window of length `win`.
pub fn centered_start(frame: usize, hop: usize, win: usize) -> isize {
    (frame * hop + hop / 2) as isize - (win / 2) as isize
}

/// Start sample of a window of length `win` ending at the end of frame `frame`.
pub fn causal_start(frame: usize, hop: usize, win: usize) -> isize {
    ((frame + 1) * hop) as isize - win as isize
}

/// Copies `out.len()` samples beginning at `start`, zero-filling outside the signal.
pub fn fill_window(signal: &[f32], start: isize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let idx = start + i as isize;
        *o = if idx >= 0 && (idx as usize) < signal.len() {
            signal[idx as usize] as f64
        } else {
            0.0
        };
    }
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Power or magnitude spectra of zero-padded frames.
pub struct Spectrum {
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn new(n_fft: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Spectrum {
            n_fft,
            fft,
            buffer: vec![Complex::default(); n_fft],
            scratch,
        }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Writes |X[k]|² for k in 0..=n_fft/2 into `out`.
    pub fn power(&mut self, frame: &[f64], out: &mut [f64]) {
        self.transform(frame);
        for (o, c) in out.iter_mut().zip(&self.buffer[..self.n_fft / 2 + 1]) {
            *o = c.norm_sqr();
        }
    }

    /// Writes |X[k]| for k in 0..=n_fft/2 into `out`.
    pub fn magnitude(&mut self, frame: &[f64], out: &mut [f64]) {
        self.transform(frame);
        for (o, c) in out.iter_mut().zip(&self.buffer[..self.n_fft / 2 + 1]) {
            *o = c.norm();
        }
    }

    fn transform(&mut self, frame: &[f64]) {
        debug_assert!(frame.len() <= self.n_fft);
        for (b, &x) in self.buffer.iter_mut().zip(frame.iter().chain(std::iter::repeat(&0.0))) {
            *b = Complex::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
    }
}
