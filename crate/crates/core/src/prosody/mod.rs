//! Frame-level prosody targets: log-pitch with voicing, and log-energy.

mod align;
mod energy;
pub mod pitch;
mod track;

pub use align::align_track;
pub use energy::{extract_energy, frame_rms, ENERGY_FLOOR, ENERGY_WINDOW};
pub use pitch::{extract_pitch, extract_pitch_with, PitchConfig, PitchTracker};
pub use track::{ProsodyKind, ProsodyTrack, UNVOICED_SENTINEL};

use crate::data::Waveform;
use crate::error::Result;

/// Bumped whenever target numerics change; part of cache keys.
pub const TARGET_VERSION: &str = "1";

pub fn extract_track(waveform: &Waveform, kind: ProsodyKind, hop_ms: u32) -> Result<ProsodyTrack> {
    match kind {
        ProsodyKind::Pitch => extract_pitch(waveform, hop_ms),
        ProsodyKind::Energy => extract_energy(waveform, hop_ms),
    }
}
