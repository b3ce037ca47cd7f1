use std::path::Path;

use rubato::{FftFixedIn, Resampler};

use crate::data::manifest::UtteranceRecord;
use crate::error::{Error, Result};

/// Every downstream computation runs at this rate.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono audio at [`SAMPLE_RATE`] with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub utterance_id: String,
    pub samples: Vec<f32>,
}

impl Waveform {
    pub fn new(utterance_id: impl Into<String>, samples: Vec<f32>) -> Self {
        Waveform {
            utterance_id: utterance_id.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }
}

pub fn load_audio(record: &UtteranceRecord) -> Result<Waveform> {
    let samples = read_wav_mono_16k(&record.audio_path)?;
    Ok(Waveform::new(record.id.clone(), samples))
}

/// Decodes a WAV file, mixes channels by mean and resamples to 16 kHz.
pub fn read_wav_mono_16k(path: &Path) -> Result<Vec<f32>> {
    let audio_err = |message: String| Error::Audio {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| audio_err(e.to_string()))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| audio_err(e.to_string()))?,
        hound::SampleFormat::Int => {
            let full_scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 / full_scale))
                .collect::<Result<_, _>>()
                .map_err(|e| audio_err(e.to_string()))?
        }
    };
    if channels == 0 || interleaved.len() < channels {
        return Err(audio_err("zero-length audio".into()));
    }
    let mono: Vec<f32> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    let mut out = if spec.sample_rate == SAMPLE_RATE {
        mono
    } else {
        resample(&mono, spec.sample_rate, SAMPLE_RATE).map_err(audio_err)?
    };
    for s in &mut out {
        *s = s.clamp(-1.0, 1.0);
    }
    if out.is_empty() {
        return Err(audio_err("zero-length audio".into()));
    }
    Ok(out)
}

/// Rational-ratio FFT resampling; output length is round(n · to / from) and
/// the filter delay is removed.
pub fn resample(input: &[f32], from: u32, to: u32) -> Result<Vec<f32>, String> {
    if input.is_empty() {
        return Ok(Vec::new());
    }
    let expected = ((input.len() as u64 * to as u64 + from as u64 / 2) / from as u64) as usize;
    let chunk = 1024;
    let mut resampler = FftFixedIn::<f64>::new(from as usize, to as usize, chunk, 2, 1)
        .map_err(|e| e.to_string())?;
    let delay = resampler.output_delay();
    let signal: Vec<f64> = input.iter().map(|&s| s as f64).collect();
    let mut out: Vec<f64> = Vec::with_capacity(expected + delay);
    let mut pos = 0;
    while pos < signal.len() {
        let need = resampler.input_frames_next();
        let block = if pos + need <= signal.len() {
            resampler.process(&[&signal[pos..pos + need]], None)
        } else {
            resampler.process_partial(Some(&[&signal[pos..]]), None)
        }
        .map_err(|e| e.to_string())?;
        out.extend_from_slice(&block[0]);
        pos += need;
    }
    while out.len() < expected + delay {
        let block = resampler
            .process_partial::<&[f64]>(None, None)
            .map_err(|e| e.to_string())?;
        out.extend_from_slice(&block[0]);
    }
    Ok(out[delay..delay + expected].iter().map(|&s| s as f32).collect())
}

/// Writes 16-bit PCM; used for synthetic corpora and tests.
pub fn write_wav(path: &Path, samples: &[f32], sample_rate: u32, channels: u16) -> Result<()> {
    let spec = hound::WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let audio_err = |e: hound::Error| Error::Audio {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(audio_err)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16;
        writer.write_sample(v).map_err(audio_err)?;
    }
    writer.finalize().map_err(audio_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f32::consts::PI;

    fn sine(freq: f32, rate: u32, seconds: f32) -> Vec<f32> {
        let n = (rate as f32 * seconds) as usize;
        (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f32 / rate as f32).sin())
            .collect()
    }

    #[test]
    fn one_second_at_16k() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_wav(&path, &sine(220.0, 16000, 1.0), 16000, 1).unwrap();
        let out = read_wav_mono_16k(&path).unwrap();
        assert!((out.len() as i64 - 16000).abs() <= 1);
    }

    #[test]
    fn stereo_is_channel_mean() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let mut inter = Vec::new();
        for i in 0..1600 {
            inter.push(0.5);
            inter.push(if i % 2 == 0 { -0.5 } else { 0.25 });
        }
        write_wav(&path, &inter, 16000, 2).unwrap();
        let out = read_wav_mono_16k(&path).unwrap();
        assert_eq!(out.len(), 1600);
        assert!(out[0].abs() < 1e-4);
        assert!((out[1] - 0.375).abs() < 1e-4);
    }

    #[test]
    fn resamples_44k1() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.wav");
        let src = sine(440.0, 44100, 1.0);
        write_wav(&path, &src, 44100, 1).unwrap();
        let out = read_wav_mono_16k(&path).unwrap();
        assert!((out.len() as i64 - 16000).abs() <= 1);
        // Compare against the analytic tone away from the edges.
        let reference = sine(440.0, 16000, 1.0);
        let max_err = (2000..14000)
            .map(|i| (out[i] - reference[i]).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err < 0.01, "max error {max_err}");
    }

    #[test]
    fn deterministic_decode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.wav");
        write_wav(&path, &sine(123.0, 22050, 0.3), 22050, 1).unwrap();
        assert_eq!(
            read_wav_mono_16k(&path).unwrap(),
            read_wav_mono_16k(&path).unwrap()
        );
    }

    #[test]
    fn decode_failures() {
        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"not a wav file").unwrap();
        assert!(matches!(read_wav_mono_16k(&junk), Err(Error::Audio { .. })));
        let empty = dir.path().join("empty.wav");
        write_wav(&empty, &[], 16000, 1).unwrap();
        assert!(matches!(read_wav_mono_16k(&empty), Err(Error::Audio { .. })));
    }
}
