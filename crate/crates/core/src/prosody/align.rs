use crate::error::{Error, Result};
use crate::prosody::{ProsodyTrack, UNVOICED_SENTINEL};

/// Resamples a track onto an upstream's frame grid.
///
/// Output frame `j` aggregates input frames `[j·r, (j+1)·r)` with
/// `r = target_stride / hop`. It is voiced when at least ⌈r/2⌉ constituents
/// are voiced (ties count as voiced) and takes the mean of the voiced
/// constituents. The result is clipped or padded with unvoiced frames to
/// exactly `target_frames`.
pub fn align_track(
    track: &ProsodyTrack,
    target_stride_ms: u32,
    target_frames: usize,
) -> Result<ProsodyTrack> {
    if target_stride_ms == 0 || !target_stride_ms.is_multiple_of(track.hop_ms) {
        return Err(Error::NonIntegerRatio {
            hop_ms: track.hop_ms,
            stride_ms: target_stride_ms,
        });
    }
    let r = (target_stride_ms / track.hop_ms) as usize;
    let needed = r.div_ceil(2);
    let mut values = Vec::with_capacity(target_frames);
    let mut voiced = Vec::with_capacity(target_frames);
    for j in 0..target_frames {
        let lo = (j * r).min(track.len());
        let hi = ((j + 1) * r).min(track.len());
        let (mut sum, mut count) = (0.0f64, 0usize);
        for i in lo..hi {
            if track.voiced[i] {
                sum += track.values[i] as f64;
                count += 1;
            }
        }
        if count >= needed && count > 0 {
            values.push((sum / count as f64) as f32);
            voiced.push(true);
        } else {
            values.push(UNVOICED_SENTINEL);
            voiced.push(false);
        }
    }
    Ok(ProsodyTrack {
        kind: track.kind,
        values,
        voiced,
        hop_ms: target_stride_ms,
        utterance_id: track.utterance_id.clone(),
    })
}
