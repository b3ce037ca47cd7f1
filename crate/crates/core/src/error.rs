use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("record `{id}`: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("duplicate record ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),

    #[error("sentiment score {0} outside [-3, 3]")]
    ScoreOutOfRange(f64),

    #[error("cannot build {k} folds from {records} records")]
    InvalidFolds { k: usize, records: usize },

    #[error("audio {path}: {message}")]
    Audio { path: PathBuf, message: String },

    #[error("upstream `{upstream}`: {message}")]
    Upstream { upstream: String, message: String },

    #[error("upstream `{0}` cannot run in causal mode")]
    NotCausal(String),

    #[error("unknown upstream `{0}`")]
    UnknownUpstream(String),

    #[error("input of {samples} samples is shorter than one {what} window ({window} samples)")]
    TooShort {
        what: &'static str,
        samples: usize,
        window: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("track hop {hop_ms} ms does not divide target stride {stride_ms} ms")]
    NonIntegerRatio { hop_ms: u32, stride_ms: u32 },

    #[error("invalid horizon: {0}")]
    Horizon(String),

    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("every learning rate in the sweep diverged")]
    AllDiverged,

    #[error("missing {0} split")]
    MissingSplit(&'static str),

    #[error("class {0} has no examples after label binning")]
    EmptyClass(usize),

    #[error("no voiced frames in the {0} set")]
    NoVoicedFrames(&'static str),

    #[error("layer index {index} out of range for {num_layers} layers")]
    LayerOutOfRange { index: usize, num_layers: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
