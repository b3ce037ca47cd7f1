use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProsodyKind {
    Pitch,
    Energy,
}

impl ProsodyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProsodyKind::Pitch => "pitch",
            ProsodyKind::Energy => "energy",
        }
    }
}

impl fmt::Display for ProsodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProsodyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pitch" => Ok(ProsodyKind::Pitch),
            "energy" => Ok(ProsodyKind::Energy),
            other => Err(Error::Config(format!("unknown prosody feature `{other}`"))),
        }
    }
}

/// Value stored in unvoiced frames. Consumers go through the mask.
pub const UNVOICED_SENTINEL: f32 = 0.0;

/// Per-frame log-pitch or log-energy with a voicing mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsodyTrack {
    pub kind: ProsodyKind,
    pub values: Vec<f32>,
    pub voiced: Vec<bool>,
    pub hop_ms: u32,
    pub utterance_id: String,
}

impl ProsodyTrack {
    pub fn new(
        kind: ProsodyKind,
        values: Vec<f32>,
        voiced: Vec<bool>,
        hop_ms: u32,
        utterance_id: impl Into<String>,
    ) -> Result<Self> {
        let track = ProsodyTrack {
            kind,
            values,
            voiced,
            hop_ms,
            utterance_id: utterance_id.into(),
        };
        track.validate()?;
        Ok(track)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.voiced.len() {
            return Err(Error::Shape(format!(
                "track `{}`: {} values but {} mask entries",
                self.utterance_id,
                self.values.len(),
                self.voiced.len()
            )));
        }
        if self.hop_ms == 0 {
            return Err(Error::Shape("hop must be positive".into()));
        }
        if self
            .values
            .iter()
            .zip(&self.voiced)
            .any(|(v, &m)| m && !v.is_finite())
        {
            return Err(Error::Shape(format!(
                "track `{}` has a non-finite voiced value",
                self.utterance_id
            )));
        }
        Ok(())
    }
}
