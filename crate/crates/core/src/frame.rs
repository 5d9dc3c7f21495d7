//! Ambient data shared by every computation: density direction and soliton
//! constant.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("direction vector has near-zero length {norm:.3e}")]
    ZeroDirection { norm: f64 },
    #[error("soliton constant is not finite")]
    NonFiniteLambda,
}

/// Density direction `v` (kept unit length) and soliton constant `lambda`.
///
/// The ambient density is `exp(<q, v>)`; a surface belongs to the family when
/// its mean curvature satisfies `H = lambda + <N, v>/2` pointwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityFrame {
    v: Vector3<f64>,
    lambda: f64,
}

impl DensityFrame {
    /// Builds a frame, normalizing `v`. Rejects near-zero directions and
    /// non-finite constants.
    pub fn new(v: Vector3<f64>, lambda: f64) -> Result<Self, FrameError> {
        let norm = v.norm();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(FrameError::ZeroDirection { norm });
        }
        if !lambda.is_finite() {
            return Err(FrameError::NonFiniteLambda);
        }
        Ok(Self { v: v / norm, lambda })
    }

    /// Vertical density direction `e3` with the given constant; the frame
    /// every graph computation uses.
    pub fn vertical(lambda: f64) -> Self {
        Self::new(Vector3::z(), lambda).expect("e3 is unit")
    }

    pub fn v(&self) -> Vector3<f64> {
        self.v
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { v: self.v, lambda }
    }
}
