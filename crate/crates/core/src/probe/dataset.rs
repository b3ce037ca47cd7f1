use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::data::{CacheKey, FeatureCache};
use crate::error::{Error, Result};
use crate::prosody::ProsodyTrack;
use crate::upstream::LayerFeatureStack;

/// Where a frame-level example's features live.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    Memory(Arc<LayerFeatureStack>),
    Cached { cache: FeatureCache, key: CacheKey },
}

impl FeatureSource {
    pub fn load(&self) -> Result<Arc<LayerFeatureStack>> {
        match self {
            FeatureSource::Memory(stack) => Ok(Arc::clone(stack)),
            FeatureSource::Cached { cache, key } => cache
                .get_features(key)
                .map(Arc::new)
                .ok_or_else(|| Error::Config(format!("features for `{}` not in cache", key.utterance_id))),
        }
    }
}

/// Per-layer mean L2 norm of the frame vectors.
pub fn mean_layer_norms(stack: &LayerFeatureStack) -> Vec<f64> {
    let t = stack.num_frames().max(1) as f64;
    stack
        .layers
        .axis_iter(Axis(0))
        .map(|layer| {
            layer
                .axis_iter(Axis(0))
                .map(|frame| frame.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt())
                .sum::<f64>()
                / t
        })
        .collect()
}

/// An utterance reduced to its per-layer time means. Mean pooling commutes
/// with the layer-weighted sum, so classification probes train on these.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledExample {
    pub id: String,
    pub layer_means: Array2<f64>,
    pub layer_norms: Vec<f64>,
    pub label: usize,
}

impl PooledExample {
    pub fn from_stack(stack: &LayerFeatureStack, label: usize) -> Result<Self> {
        if stack.num_frames() == 0 {
            return Err(Error::Empty("utterance frames"));
        }
        let layer_means = stack
            .layers
            .mean_axis(Axis(1))
            .expect("non-empty")
            .mapv(|v| v as f64);
        Ok(PooledExample {
            id: stack.utterance_id.clone(),
            layer_means,
            layer_norms: mean_layer_norms(stack),
            label,
        })
    }

    /// Concatenates the selected layer means into a single layer.
    pub fn select_layers(&self, indices: &[usize]) -> Result<Self> {
        let (l, d) = self.layer_means.dim();
        let mut out = Array2::zeros((1, d * indices.len()));
        for (k, &i) in indices.iter().enumerate() {
            if i >= l {
                return Err(Error::LayerOutOfRange { index: i, num_layers: l });
            }
            out.slice_mut(ndarray::s![0, k * d..(k + 1) * d])
                .assign(&self.layer_means.row(i));
        }
        let norm = indices
            .iter()
            .map(|&i| self.layer_norms[i] * self.layer_norms[i])
            .sum::<f64>()
            .sqrt();
        Ok(PooledExample {
            id: self.id.clone(),
            layer_means: out,
            layer_norms: vec![norm],
            label: self.label,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationSet {
    pub examples: Vec<PooledExample>,
    pub num_classes: usize,
}

impl ClassificationSet {
    pub fn new(examples: Vec<PooledExample>, num_classes: usize) -> Result<Self> {
        let first = examples.first().ok_or(Error::Empty("classification set"))?;
        let shape = first.layer_means.dim();
        for ex in &examples {
            if ex.layer_means.dim() != shape {
                return Err(Error::Shape(format!(
                    "`{}` has shape {:?}, expected {:?}",
                    ex.id,
                    ex.layer_means.dim(),
                    shape
                )));
            }
            if ex.label >= num_classes {
                return Err(Error::InvalidRecord {
                    id: ex.id.clone(),
                    message: format!("label {} outside {num_classes} classes", ex.label),
                });
            }
        }
        Ok(ClassificationSet { examples, num_classes })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.examples[0].layer_means.nrows()
    }

    pub fn dim(&self) -> usize {
        self.examples[0].layer_means.ncols()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn select_layers(&self, indices: &[usize]) -> Result<Self> {
        let examples = self
            .examples
            .iter()
            .map(|e| e.select_layers(indices))
            .collect::<Result<Vec<_>>>()?;
        ClassificationSet::new(examples, self.num_classes)
    }
}

/// A frame-level regression example. `targets[t]` is the value to predict from
/// feature frame `t`, already shifted by the prediction offset.
#[derive(Debug, Clone)]
pub struct FrameExample {
    pub id: String,
    pub features: FeatureSource,
    pub layer_selection: Option<Vec<usize>>,
    pub targets: Vec<f32>,
    pub voiced: Vec<bool>,
}

impl FrameExample {
    /// `track` must be aligned to the feature frames (`num_frames` long); the
    /// last `frame_offset` frames have no target and are dropped.
    pub fn new(
        id: impl Into<String>,
        features: FeatureSource,
        num_frames: usize,
        track: &ProsodyTrack,
        frame_offset: usize,
    ) -> Result<Self> {
        let id = id.into();
        if track.len() != num_frames {
            return Err(Error::Shape(format!(
                "track for `{id}` has {} frames, features have {num_frames}",
                track.len()
            )));
        }
        let start = frame_offset.min(num_frames);
        Ok(FrameExample {
            id,
            features,
            layer_selection: None,
            targets: track.values[start..].to_vec(),
            voiced: track.voiced[start..].to_vec(),
        })
    }

    pub fn num_scored_frames(&self) -> usize {
        self.targets.len()
    }

    pub fn num_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Features with any layer selection applied.
    pub fn stack(&self) -> Result<Arc<LayerFeatureStack>> {
        let stack = self.features.load()?;
        let stack = match &self.layer_selection {
            Some(sel) => Arc::new(stack.concat_layers(sel)?),
            None => stack,
        };
        if stack.num_frames() < self.targets.len() {
            return Err(Error::Shape(format!(
                "`{}` has {} feature frames for {} targets",
                self.id,
                stack.num_frames(),
                self.targets.len()
            )));
        }
        Ok(stack)
    }
}

#[derive(Debug, Clone)]
pub struct RegressionSet {
    pub examples: Vec<FrameExample>,
    num_layers: usize,
    dim: usize,
}

impl RegressionSet {
    pub fn new(examples: Vec<FrameExample>, num_layers: usize, dim: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Empty("regression set"));
        }
        if num_layers == 0 || dim == 0 {
            return Err(Error::Shape(format!("layout {num_layers} × {dim}")));
        }
        Ok(RegressionSet { examples, num_layers, dim })
    }

    /// Builds a set from in-memory stacks, inferring the layout.
    pub fn from_stacks(examples: Vec<FrameExample>) -> Result<Self> {
        let first = examples.first().ok_or(Error::Empty("regression set"))?;
        let stack = first.stack()?;
        let (l, d) = (stack.num_layers(), stack.dim());
        RegressionSet::new(examples, l, d)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_voiced(&self) -> usize {
        self.examples.iter().map(FrameExample::num_voiced).sum()
    }

    pub fn select_layers(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("layer selection"));
        }
        if self.examples.iter().any(|e| e.layer_selection.is_some()) {
            return Err(Error::Config("layer selection already applied".into()));
        }
        for &i in indices {
            if i >= self.num_layers {
                return Err(Error::LayerOutOfRange { index: i, num_layers: self.num_layers });
            }
        }
        let examples = self
            .examples
            .iter()
            .map(|e| FrameExample {
                layer_selection: Some(indices.to_vec()),
                ..e.clone()
            })
            .collect();
        RegressionSet::new(examples, 1, self.dim * indices.len())
    }

    /// Replaces each example's targets with those of another example (cyclic
    /// shift by one), truncating or padding with unvoiced frames.
    pub fn with_shuffled_targets(&self) -> Self {
        let n = self.examples.len();
        let examples = (0..n)
            .map(|i| {
                let donor = &self.examples[(i + 1) % n];
                let len = self.examples[i].targets.len();
                let mut targets = donor.targets.clone();
                let mut voiced = donor.voiced.clone();
                targets.resize(len, 0.0);
                voiced.resize(len, false);
                FrameExample {
                    targets,
                    voiced,
                    ..self.examples[i].clone()
                }
            })
            .collect();
        RegressionSet {
            examples,
            num_layers: self.num_layers,
            dim: self.dim,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainingSet {
    Classification(ClassificationSet),
    Regression(RegressionSet),
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        match self {
            TrainingSet::Classification(s) => s.len(),
            TrainingSet::Regression(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_layers(&self) -> usize {
        match self {
            TrainingSet::Classification(s) => s.num_layers(),
            TrainingSet::Regression(s) => s.num_layers(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainingSet::Classification(s) => s.dim(),
            TrainingSet::Regression(s) => s.dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            TrainingSet::Classification(s) => s.num_classes,
            TrainingSet::Regression(_) => 1,
        }
    }
}
