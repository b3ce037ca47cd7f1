//! Manifests, labels, folds, audio loading and the feature/target cache.

pub mod audio;
pub mod cache;
pub mod folds;
pub mod labels;
pub mod manifest;

pub use audio::{load_audio, read_wav_mono_16k, write_wav, Waveform, SAMPLE_RATE};
pub use cache::{CacheKey, FeatureCache, Payload};
pub use folds::{make_folds, FoldAssignment};
pub use labels::{bin_sentiment_label, BinnedLabel, SentimentScheme};
pub use manifest::{
    fold_groups, load_manifest, DatasetManifest, LabelScheme, Split, SplitName, Task, UtteranceRecord,
};
