use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentScheme {
    Binary,
    Seven,
}

impl SentimentScheme {
    pub fn num_classes(self) -> usize {
        match self {
            SentimentScheme::Binary => 2,
            SentimentScheme::Seven => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinnedLabel {
    Class(usize),
    Excluded,
}

/// Maps a continuous sentiment score in [-3, 3] to a class index.
///
/// Binary: [-3, 0) is class 0, (0, 3] is class 1 and 0 itself is excluded.
/// Seven: the score is rounded half away from zero to an integer in -3..=3,
/// which is shifted to a class in 0..=6.
pub fn bin_sentiment_label(score: f64, scheme: SentimentScheme) -> Result<BinnedLabel> {
    if !(-3.0..=3.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(match scheme {
        SentimentScheme::Binary if score < 0.0 => BinnedLabel::Class(0),
        SentimentScheme::Binary if score > 0.0 => BinnedLabel::Class(1),
        SentimentScheme::Binary => BinnedLabel::Excluded,
        // f64::round rounds half away from zero.
        SentimentScheme::Seven => BinnedLabel::Class((score.round() + 3.0) as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent rounding oracle: pick the nearest integer by distance,
    /// breaking exact ties toward the larger magnitude.
    fn nearest_integer_oracle(score: f64) -> i64 {
        let mut best = -3i64;
        for k in -3i64..=3 {
            let d = (score - k as f64).abs();
            let bd = (score - best as f64).abs();
            if d < bd || (d == bd && (k as f64).abs() > (best as f64).abs()) {
                best = k;
            }
        }
        best
    }

    #[test]
    fn binary_examples() {
        assert_eq!(
            bin_sentiment_label(2.4, SentimentScheme::Binary).unwrap(),
            BinnedLabel::Class(1)
        );
        assert_eq!(
            bin_sentiment_label(0.0, SentimentScheme::Binary).unwrap(),
            BinnedLabel::Excluded
        );
        assert_eq!(
            bin_sentiment_label(-3.0, SentimentScheme::Binary).unwrap(),
            BinnedLabel::Class(0)
        );
    }

    #[test]
    fn seven_class_example() {
        assert_eq!(
            bin_sentiment_label(1.6, SentimentScheme::Seven).unwrap(),
            BinnedLabel::Class(5)
        );
        // Zero is kept in the seven-class setup.
        assert_eq!(
            bin_sentiment_label(0.0, SentimentScheme::Seven).unwrap(),
            BinnedLabel::Class(3)
        );
    }

    #[test]
    fn seven_class_matches_oracle_on_grid() {
        // Grid of step 0.05 includes every half-integer tie point.
        for i in -60..=60 {
            let score = i as f64 * 0.05;
            let expected = (nearest_integer_oracle(score) + 3) as usize;
            assert_eq!(
                bin_sentiment_label(score, SentimentScheme::Seven).unwrap(),
                BinnedLabel::Class(expected),
                "score {score}"
            );
        }
        assert_eq!(
            bin_sentiment_label(-2.5, SentimentScheme::Seven).unwrap(),
            BinnedLabel::Class(0)
        );
        assert_eq!(
            bin_sentiment_label(2.5, SentimentScheme::Seven).unwrap(),
            BinnedLabel::Class(6)
        );
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(bin_sentiment_label(3.01, SentimentScheme::Binary).is_err());
        assert!(bin_sentiment_label(-4.0, SentimentScheme::Seven).is_err());
        assert!(bin_sentiment_label(f64::NAN, SentimentScheme::Seven).is_err());
    }

    proptest! {
        #[test]
        fn binary_is_total_and_monotone(a in -3.0f64..3.0, b in -3.0f64..=3.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let l = bin_sentiment_label(lo, SentimentScheme::Binary).unwrap();
            let h = bin_sentiment_label(hi, SentimentScheme::Binary).unwrap();
            if lo < 0.0 && hi > 0.0 {
                prop_assert_eq!(l, BinnedLabel::Class(0));
                prop_assert_eq!(h, BinnedLabel::Class(1));
            }
        }

        #[test]
        fn seven_is_symmetric(s in 0.0f64..=3.0) {
            let BinnedLabel::Class(p) = bin_sentiment_label(s, SentimentScheme::Seven).unwrap() else { unreachable!() };
            let BinnedLabel::Class(n) = bin_sentiment_label(-s, SentimentScheme::Seven).unwrap() else { unreachable!() };
            prop_assert_eq!(p as i64 - 3, -(n as i64 - 3));
        }
    }
}
