//! Line-delimited dataset manifests.
//!
//! The first line is a header object carrying the format version and dataset
//! metadata; every following non-empty line is one [`UtteranceRecord`].
//! Relative audio paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

pub const MANIFEST_FORMAT: &str = "prosody-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "SA")]
    Sentiment,
    #[serde(rename = "SarD")]
    Sarcasm,
    #[serde(rename = "PP")]
    Persuasiveness,
    #[serde(rename = "ProR")]
    ProsodyReconstruction,
    #[serde(rename = "FVP")]
    FutureValuePrediction,
    #[serde(rename = "XL-ProR")]
    CrossLingual,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sentiment => "SA",
            Task::Sarcasm => "SarD",
            Task::Persuasiveness => "PP",
            Task::ProsodyReconstruction => "ProR",
            Task::FutureValuePrediction => "FVP",
            Task::CrossLingual => "XL-ProR",
        }
    }

    pub fn is_frame_level(self) -> bool {
        matches!(
            self,
            Task::ProsodyReconstruction | Task::FutureValuePrediction | Task::CrossLingual
        )
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Task::Sentiment,
            Task::Sarcasm,
            Task::Persuasiveness,
            Task::ProsodyReconstruction,
            Task::FutureValuePrediction,
            Task::CrossLingual,
        ]
        .into_iter()
        .find(|t| t.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

/// Either a named split or a cross-validation fold index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Split {
    Named(SplitName),
    Fold(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    /// Pre-binarized 0/1 labels (SarD, PP).
    Binary,
    /// Continuous sentiment scores in [-3, 3] (SA).
    SentimentScore,
    /// Frame-level tasks: targets come from the audio.
    None,
}

impl FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(LabelScheme::Binary),
            "sentiment-score" => Ok(LabelScheme::SentimentScore),
            "none" => Ok(LabelScheme::None),
            other => Err(Error::Config(format!("unknown label scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_path: PathBuf,
    pub sample_rate: u32,
    /// Seconds.
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
    pub split: Split,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "en".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    name: String,
    task: Task,
    label_scheme: LabelScheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub task: Task,
    pub label_scheme: LabelScheme,
    pub records: Vec<UtteranceRecord>,
}

impl DatasetManifest {
    /// Builds and validates an in-memory manifest. Audio paths are not checked.
    pub fn new(
        name: impl Into<String>,
        task: Task,
        label_scheme: LabelScheme,
        records: Vec<UtteranceRecord>,
    ) -> Result<Self> {
        let manifest = DatasetManifest {
            name: name.into(),
            task,
            label_scheme,
            records,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split(&self, split: SplitName) -> impl Iterator<Item = &UtteranceRecord> {
        self.records
            .iter()
            .filter(move |r| r.split == Split::Named(split))
    }

    /// Digest over every record's identity, label and split assignment.
    pub fn data_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update(self.task.as_str().as_bytes());
        for r in &self.records {
            hasher.update(r.id.as_bytes());
            hasher.update([0]);
            if let Some(label) = r.label {
                hasher.update(label.to_le_bytes());
            }
            match r.split {
                Split::Named(s) => hasher.update(s.as_str().as_bytes()),
                Split::Fold(k) => hasher.update((k as u64).to_le_bytes()),
            }
            hasher.update(r.language.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut duplicates = Vec::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) && !duplicates.contains(&r.id) {
                duplicates.push(r.id.clone());
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::DuplicateIds(duplicates));
        }
        for r in &self.records {
            validate_record(r, self.label_scheme)?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header = Header {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            name: self.name.clone(),
            task: self.task,
            label_scheme: self.label_scheme,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.push(b'\n');
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.push(b'\n');
        }
        let mut file = fs::File::create(path).at(path)?;
        file.write_all(&out).at(path)
    }
}

fn validate_record(r: &UtteranceRecord, scheme: LabelScheme) -> Result<()> {
    let invalid = |message: String| Error::InvalidRecord {
        id: r.id.clone(),
        message,
    };
    if r.id.is_empty() {
        return Err(invalid("empty id".into()));
    }
    if !r.duration.is_finite() || r.duration <= 0.0 {
        return Err(invalid(format!("duration must be > 0, got {}", r.duration)));
    }
    if r.sample_rate == 0 {
        return Err(invalid("sample_rate must be > 0".into()));
    }
    match (scheme, r.label) {
        (LabelScheme::Binary, Some(l)) if l == 0.0 || l == 1.0 => {}
        (LabelScheme::Binary, other) => {
            return Err(invalid(format!("binary label must be 0 or 1, got {other:?}")))
        }
        (LabelScheme::SentimentScore, Some(l)) if (-3.0..=3.0).contains(&l) => {}
        (LabelScheme::SentimentScore, other) => {
            return Err(invalid(format!(
                "sentiment score must lie in [-3, 3], got {other:?}"
            )))
        }
        (LabelScheme::None, _) => {}
    }
    Ok(())
}

/// Reads, validates and resolves a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).at(path)?;
    let err = |message: String| Error::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines.next().ok_or_else(|| err("empty file".into()))?;
    let header: Header =
        serde_json::from_str(header_line).map_err(|e| err(format!("header: {e}")))?;
    if header.format != MANIFEST_FORMAT {
        return Err(err(format!("unexpected format `{}`", header.format)));
    }
    if header.version != MANIFEST_VERSION {
        return Err(err(format!("unsupported version {}", header.version)));
    }

    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let mut record: UtteranceRecord = serde_json::from_str(line)
            .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
        if record.audio_path.is_relative() {
            record.audio_path = base.join(&record.audio_path);
        }
        records.push(record);
    }
    let manifest = DatasetManifest::new(header.name, header.task, header.label_scheme, records)?;
    for r in &manifest.records {
        if !r.audio_path.is_file() {
            return Err(Error::InvalidRecord {
                id: r.id.clone(),
                message: format!("audio path {} does not resolve", r.audio_path.display()),
            });
        }
    }
    Ok(manifest)
}

/// Groups record indices by fold index (for manifests that carry folds).
pub fn fold_groups(manifest: &DatasetManifest) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in manifest.records.iter().enumerate() {
        if let Split::Fold(k) = r.split {
            groups.entry(k).or_default().push(i);
        }
    }
    groups
}
