use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prediction horizons in milliseconds.
pub const HORIZONS_MS: [u32; 4] = [120, 240, 500, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSpec {
    pub horizon_ms: u32,
    pub stride_ms: u32,
    pub frame_offset: usize,
}

impl HorizonSpec {
    pub fn new(horizon_ms: u32, stride_ms: u32) -> Result<Self> {
        if !HORIZONS_MS.contains(&horizon_ms) {
            return Err(Error::Horizon(format!(
                "{horizon_ms} ms is not one of {HORIZONS_MS:?}"
            )));
        }
        if stride_ms == 0 || !horizon_ms.is_multiple_of(stride_ms) {
            return Err(Error::Horizon(format!(
                "{horizon_ms} ms is not a whole number of {stride_ms} ms frames"
            )));
        }
        Ok(HorizonSpec {
            horizon_ms,
            stride_ms,
            frame_offset: (horizon_ms / stride_ms) as usize,
        })
    }

    /// Parses a horizon given in seconds.
    pub fn from_seconds(seconds: f64, stride_ms: u32) -> Result<Self> {
        let ms = seconds * 1000.0;
        let rounded = ms.round();
        if !seconds.is_finite() || seconds <= 0.0 || (ms - rounded).abs() > 1e-6 {
            return Err(Error::Horizon(format!("{seconds} s is not a whole number of ms")));
        }
        HorizonSpec::new(rounded as u32, stride_ms)
    }

    pub fn seconds(&self) -> f64 {
        self.horizon_ms as f64 / 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets() {
        assert_eq!(HorizonSpec::from_seconds(0.12, 20).unwrap().frame_offset, 6);
        assert_eq!(HorizonSpec::from_seconds(0.12, 10).unwrap().frame_offset, 12);
        assert_eq!(HorizonSpec::from_seconds(1.0, 20).unwrap().frame_offset, 50);
        assert_eq!(HorizonSpec::from_seconds(0.5, 20).unwrap().frame_offset, 25);
    }

    #[test]
    fn invalid_horizons() {
        assert!(HorizonSpec::from_seconds(0.3, 20).is_err());
        assert!(HorizonSpec::new(120, 7).is_err());
        assert!(HorizonSpec::from_seconds(f64::NAN, 20).is_err());
    }
}
