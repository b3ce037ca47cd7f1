//! Probing frozen speech representations for prosody.
//!
//! Upstream extractors produce layerwise frame features; a probe learns a
//! softmax-weighted sum over layers followed by a linear head, for
//! utterance classification (sentiment, sarcasm, persuasiveness) and for
//! frame-level regression of pitch and energy, now or at a future horizon.

pub mod analysis;
pub mod data;
mod dsp;
pub mod error;
pub mod probe;
pub mod prosody;
pub mod synth;
pub mod tasks;
pub mod upstream;

pub use error::{Error, Result};
