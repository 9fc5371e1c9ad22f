//! Fixed-dimension latent vectors exchanged between pipeline stages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimensionality of the sketch encoder bottleneck.
pub const SKETCH_LATENT_DIM: usize = 32;
/// Dimensionality of the synthesizer control space.
pub const AUDIO_LATENT_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatentError {
    #[error("expected {expected} dimensions, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("latent value at index {0} is not finite")]
    NonFinite(usize),
    #[error("latent value {value} at index {index} is outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
}

fn check_values(values: &[f64], expected: usize) -> Result<(), LatentError> {
    if values.len() != expected {
        return Err(LatentError::DimensionMismatch {
            expected,
            actual: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(LatentError::NonFinite(index));
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(LatentError::OutOfRange { index, value });
        }
    }
    Ok(())
}

macro_rules! latent_type {
    ($(#[$meta:meta])* $name:ident, $dim:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
        pub struct $name([f64; $dim]);

        impl $name {
            pub const DIM: usize = $dim;

            pub fn zeros() -> Self {
                Self([0.0; $dim])
            }

            /// Validates length, finiteness and the `[-1, 1]` bound.
            pub fn from_slice(values: &[f64]) -> Result<Self, LatentError> {
                check_values(values, $dim)?;
                let mut out = [0.0; $dim];
                out.copy_from_slice(values);
                Ok(Self(out))
            }

            /// Clamps into `[-1, 1]`; rejects wrong length and non-finite values.
            pub fn clamped(values: &[f64]) -> Result<Self, LatentError> {
                if values.len() != $dim {
                    return Err(LatentError::DimensionMismatch {
                        expected: $dim,
                        actual: values.len(),
                    });
                }
                let mut out = [0.0; $dim];
                for (i, (o, &v)) in out.iter_mut().zip(values).enumerate() {
                    if !v.is_finite() {
                        return Err(LatentError::NonFinite(i));
                    }
                    *o = v.clamp(-1.0, 1.0);
                }
                Ok(Self(out))
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn values(&self) -> &[f64; $dim] {
                &self.0
            }

            pub fn get(&self, index: usize) -> Option<f64> {
                self.0.get(index).copied()
            }

            /// Returns a copy with one dimension replaced.
            pub fn with_dim(mut self, index: usize, value: f64) -> Result<Self, LatentError> {
                if index >= $dim {
                    return Err(LatentError::DimensionMismatch {
                        expected: $dim,
                        actual: index + 1,
                    });
                }
                if !value.is_finite() {
                    return Err(LatentError::NonFinite(index));
                }
                if !(-1.0..=1.0).contains(&value) {
                    return Err(LatentError::OutOfRange { index, value });
                }
                self.0[index] = value;
                Ok(self)
            }

            pub fn distance(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = LatentError;

            fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
                Self::from_slice(&v)
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(v: $name) -> Self {
                v.0.to_vec()
            }
        }
    };
}

latent_type!(
    /// Output of the sketch encoder bottleneck: 32 values in `[-1, 1]`.
    SketchLatent,
    SKETCH_LATENT_DIM
);

latent_type!(
    /// Synthesizer control vector: 16 values in `[-1, 1]`.
    AudioLatent,
    AUDIO_LATENT_DIM
);
