use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::probe::LayerWeights;
use crate::prosody::ProsodyTrack;
use crate::upstream::LayerFeatureStack;

/// y[t] = Σ_i w_i · x_i[t] with w the normalized layer weights.
pub fn aggregate(stack: &LayerFeatureStack, weights: &LayerWeights) -> Result<Array2<f64>> {
    if weights.len() != stack.num_layers() {
        return Err(Error::Shape(format!(
            "{} layer weights for a {}-layer stack",
            weights.len(),
            stack.num_layers()
        )));
    }
    let w = weights.normalized();
    let mut y = Array2::<f64>::zeros((stack.num_frames(), stack.dim()));
    for (i, layer) in stack.layers.axis_iter(Axis(0)).enumerate() {
        y.zip_mut_with(&layer, |acc, &x| *acc += w[i] * x as f64);
    }
    Ok(y)
}

/// Mean over the first `valid_length` frames; later (padding) frames are ignored.
pub fn mean_pool(y: ArrayView2<'_, f64>, valid_length: usize) -> Result<Array1<f64>> {
    if valid_length == 0 {
        return Err(Error::Empty("pooling window"));
    }
    if valid_length > y.nrows() {
        return Err(Error::Shape(format!(
            "valid length {valid_length} exceeds {} frames",
            y.nrows()
        )));
    }
    Ok(y.slice(ndarray::s![..valid_length, ..])
        .mean_axis(Axis(0))
        .expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskedLoss {
    Loss(f64),
    /// The mask selects nothing; callers leave the utterance out of batch means.
    NoVoicedFrames,
}

impl MaskedLoss {
    pub fn value(self) -> Option<f64> {
        match self {
            MaskedLoss::Loss(v) => Some(v),
            MaskedLoss::NoVoicedFrames => None,
        }
    }
}

/// Mean squared error over voiced frames only.
pub fn masked_mse(pred: &[f64], target: &ProsodyTrack) -> Result<MaskedLoss> {
    masked_mse_slices(pred, &target.values, &target.voiced)
}

pub fn masked_mse_slices(pred: &[f64], values: &[f32], voiced: &[bool]) -> Result<MaskedLoss> {
    if pred.len() != values.len() || values.len() != voiced.len() {
        return Err(Error::Shape(format!(
            "prediction length {} vs target length {}",
            pred.len(),
            values.len()
        )));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, &v), &m) in pred.iter().zip(values).zip(voiced) {
        if m {
            let e = p - v as f64;
            sum += e * e;
            n += 1;
        }
    }
    Ok(if n == 0 {
        MaskedLoss::NoVoicedFrames
    } else {
        MaskedLoss::Loss(sum / n as f64)
    })
}

/// Batch mean over utterances that have voiced frames; `None` if none do.
pub fn batch_masked_mse(losses: &[MaskedLoss]) -> Option<f64> {
    let vals: Vec<f64> = losses.iter().filter_map(|l| l.value()).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::Normalization;
    use crate::prosody::ProsodyKind;
    use crate::upstream::Mode;
    use ndarray::{array, Array3};
    use proptest::prelude::*;

    fn stack(layers: Array3<f32>) -> LayerFeatureStack {
        LayerFeatureStack::new(layers, 20, "u", Mode::Full).unwrap()
    }

    #[test]
    fn one_hot_limit_selects_layer() {
        let layers = Array3::from_shape_fn((4, 3, 2), |(l, t, d)| (l * 10 + t * 3 + d) as f32);
        let mut raw = vec![0.0; 4];
        raw[2] = 60.0;
        let y = aggregate(&stack(layers.clone()), &LayerWeights::from_raw(raw, Normalization::Softmax)).unwrap();
        for t in 0..3 {
            for d in 0..2 {
                assert!((y[[t, d]] - layers[[2, t, d]] as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_layers_give_the_layer() {
        let layers = Array3::from_shape_fn((3, 2, 2), |(_, t, d)| (t + 2 * d) as f32);
        let w = LayerWeights::from_raw(vec![0.3, -1.0, 2.0], Normalization::Softmax);
        let y = aggregate(&stack(layers), &w).unwrap();
        assert!((y[[1, 1]] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn half_of_second_layer() {
        let mut layers = Array3::<f32>::zeros((2, 1, 2));
        layers[[1, 0, 0]] = 4.0;
        layers[[1, 0, 1]] = -2.0;
        let y = aggregate(&stack(layers), &LayerWeights::uniform(2, Normalization::Softmax)).unwrap();
        assert_eq!(y, array![[2.0, -1.0]]);
    }

    #[test]
    fn weight_length_mismatch() {
        let layers = Array3::<f32>::zeros((2, 1, 1));
        assert!(aggregate(&stack(layers), &LayerWeights::uniform(3, Normalization::Softmax)).is_err());
    }

    #[test]
    fn pooling_examples() {
        let y = array![[1.0, 2.0], [3.0, 6.0], [100.0, 100.0]];
        assert_eq!(mean_pool(y.view(), 2).unwrap(), array![2.0, 4.0]);
        let c = array![[5.0], [5.0]];
        assert_eq!(mean_pool(c.view(), 2).unwrap(), array![5.0]);
        assert!(mean_pool(y.view(), 0).is_err());
    }

    fn track(values: Vec<f32>, voiced: Vec<bool>) -> ProsodyTrack {
        ProsodyTrack::new(ProsodyKind::Pitch, values, voiced, 10, "u").unwrap()
    }

    #[test]
    fn masked_mse_examples() {
        let t = track(vec![1.0, 0.0, 3.0], vec![true, false, true]);
        assert_eq!(masked_mse(&[1.0, 1e9, 3.0], &t).unwrap(), MaskedLoss::Loss(0.0));
        assert_eq!(masked_mse(&[2.0, -7.0, 4.0], &t).unwrap(), MaskedLoss::Loss(1.0));
        let silent = track(vec![0.0; 3], vec![false; 3]);
        let none = masked_mse(&[1.0, 2.0, 3.0], &silent).unwrap();
        assert_eq!(none, MaskedLoss::NoVoicedFrames);
        assert_eq!(batch_masked_mse(&[MaskedLoss::Loss(0.5), none]), Some(0.5));
        assert!(masked_mse(&[1.0], &t).is_err());
    }

    proptest! {
        #[test]
        fn aggregation_is_convex(
            vals in proptest::collection::vec(-5.0f32..5.0, 3 * 4 * 2),
            raw in proptest::collection::vec(-4.0f64..4.0, 3),
        ) {
            let layers = Array3::from_shape_vec((3, 4, 2), vals).unwrap();
            let y = aggregate(&stack(layers.clone()), &LayerWeights::from_raw(raw, Normalization::Softmax)).unwrap();
            for t in 0..4 {
                for d in 0..2 {
                    let col: Vec<f64> = (0..3).map(|l| layers[[l, t, d]] as f64).collect();
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(y[[t, d]] >= lo - 1e-9 && y[[t, d]] <= hi + 1e-9);
                }
            }
        }

        #[test]
        fn padding_does_not_change_pool(
            vals in proptest::collection::vec(-5.0f64..5.0, 5 * 3),
            pad in proptest::collection::vec(-50.0f64..50.0, 0..4 * 3),
        ) {
            let y = Array2::from_shape_vec((5, 3), vals.clone()).unwrap();
            let pad_rows = pad.len() / 3;
            let mut padded = vals;
            padded.extend_from_slice(&pad[..pad_rows * 3]);
            let yp = Array2::from_shape_vec((5 + pad_rows, 3), padded).unwrap();
            prop_assert_eq!(mean_pool(y.view(), 5).unwrap(), mean_pool(yp.view(), 5).unwrap());
        }

        #[test]
        fn unvoiced_predictions_never_matter(
            entries in proptest::collection::vec((-3.0f32..3.0, any::<bool>(), -9.0f64..9.0, -9.0f64..9.0), 1..40),
        ) {
            let t = track(entries.iter().map(|e| e.0).collect(), entries.iter().map(|e| e.1).collect());
            let a: Vec<f64> = entries.iter().map(|e| e.2).collect();
            let b: Vec<f64> = entries.iter().map(|e| if e.1 { e.2 } else { e.3 }).collect();
            prop_assert_eq!(masked_mse(&a, &t).unwrap(), masked_mse(&b, &t).unwrap());
        }
    }
}
