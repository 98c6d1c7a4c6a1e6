//! Columnar point cloud: positions plus optional per-point feature rows.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geom::Vec3;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Vec3>,
    features: Option<Matrix>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>) -> Result<Self, CoreError> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "point positions",
            });
        }
        Ok(PointCloud {
            positions,
            features: None,
        })
    }

    /// One feature row (dimension d) per point.
    pub fn with_features(positions: Vec<Vec3>, features: Matrix) -> Result<Self, CoreError> {
        if features.rows() != positions.len() {
            return Err(CoreError::ShapeMismatch {
                expected: positions.len(),
                got: features.rows(),
                what: "feature row count",
            });
        }
        if !features.is_finite() {
            return Err(CoreError::NonFinite {
                what: "point features",
            });
        }
        let mut pc = PointCloud::new(positions)?;
        pc.features = Some(features);
        Ok(pc)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    /// 0 when the cloud carries no features.
    pub fn feature_dim(&self) -> usize {
        self.features.as_ref().map_or(0, Matrix::cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_positions() {
        let pts = alloc::vec![Vec3::new(0.0, f64::NAN, 0.0)];
        assert!(PointCloud::new(pts).is_err());
    }

    #[test]
    fn rejects_feature_length_mismatch() {
        let pts = alloc::vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        let feats = Matrix::zeros(3, 2);
        assert!(PointCloud::with_features(pts, feats).is_err());
    }

    #[test]
    fn empty_cloud_is_valid() {
        let pc = PointCloud::new(Vec::new()).unwrap();
        assert!(pc.is_empty());
        assert_eq!(pc.feature_dim(), 0);
    }
}
