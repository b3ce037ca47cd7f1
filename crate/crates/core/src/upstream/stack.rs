use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Causal,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Causal => "causal",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "causal" => Ok(Mode::Causal),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Layerwise frame features of one utterance, shaped (layers, frames, dim).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFeatureStack {
    pub layers: Array3<f32>,
    pub stride_ms: u32,
    pub utterance_id: String,
    pub mode: Mode,
}

impl LayerFeatureStack {
    pub fn new(
        layers: Array3<f32>,
        stride_ms: u32,
        utterance_id: impl Into<String>,
        mode: Mode,
    ) -> Result<Self> {
        let stack = LayerFeatureStack {
            layers,
            stride_ms,
            utterance_id: utterance_id.into(),
            mode,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len_of(Axis(0))
    }

    pub fn num_frames(&self) -> usize {
        self.layers.len_of(Axis(1))
    }

    pub fn dim(&self) -> usize {
        self.layers.len_of(Axis(2))
    }

    pub fn layer(&self, i: usize) -> ArrayView2<'_, f32> {
        self.layers.index_axis(Axis(0), i)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers() == 0 || self.dim() == 0 {
            return Err(Error::Shape(format!(
                "stack for `{}` has shape {:?}",
                self.utterance_id,
                self.layers.shape()
            )));
        }
        if self.stride_ms == 0 {
            return Err(Error::Shape("stride must be positive".into()));
        }
        if self.layers.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape(format!(
                "non-finite feature value in `{}`",
                self.utterance_id
            )));
        }
        Ok(())
    }

    /// Concatenates the selected layers along the feature axis into a
    /// single-layer stack.
    pub fn concat_layers(&self, indices: &[usize]) -> Result<LayerFeatureStack> {
        let (l, t, d) = self.layers.dim();
        if indices.is_empty() {
            return Err(Error::Empty("layer selection"));
        }
        for &i in indices {
            if i >= l {
                return Err(Error::LayerOutOfRange {
                    index: i,
                    num_layers: l,
                });
            }
        }
        let mut out = Array3::<f32>::zeros((1, t, d * indices.len()));
        for (slot, &i) in indices.iter().enumerate() {
            out.slice_mut(ndarray::s![0, .., slot * d..(slot + 1) * d])
                .assign(&self.layer(i));
        }
        Ok(LayerFeatureStack {
            layers: out,
            stride_ms: self.stride_ms,
            utterance_id: self.utterance_id.clone(),
            mode: self.mode,
        })
    }
}
