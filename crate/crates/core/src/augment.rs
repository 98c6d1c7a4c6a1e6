//! Ordered, invertible log of geometric scene augmentations.
//!
//! Query points generated from an augmented scene must be mapped back to raw
//! sensor coordinates before range-image lookup; replaying the recorded
//! steps' inverses in reverse order does that. Copy-paste steps only record
//! which point rows were inserted (pasted objects keep their original
//! positions), so they are geometric no-ops here.

use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::CoreError;
use crate::fm;
use crate::geom::{normalize_angle, BoundingBox3D, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentationStep {
    /// Rotation about +z by the given angle (radians).
    GlobalRotation(f64),
    /// Negates the given coordinate (mirror across the opposing plane).
    FlipAxis(Axis),
    /// Uniform scaling about the origin; factor must be positive.
    GlobalScale(f64),
    /// Point rows `[start, end)` were pasted in from another frame. Identity
    /// for geometry.
    CopyPaste { start: usize, end: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AugmentationRecord {
    steps: Vec<AugmentationStep>,
}

impl AugmentationRecord {
    pub fn new() -> Self {
        AugmentationRecord::default()
    }

    pub fn push(&mut self, step: AugmentationStep) -> Result<(), CoreError> {
        match step {
            AugmentationStep::GlobalRotation(a) if !a.is_finite() => {
                return Err(CoreError::NonFinite {
                    what: "rotation angle",
                })
            }
            AugmentationStep::GlobalScale(f) if !(f.is_finite() && f > 0.0) => {
                return Err(CoreError::NonFinite {
                    what: "scale factor (must be positive)",
                })
            }
            AugmentationStep::CopyPaste { start, end } if end < start => {
                return Err(CoreError::NonFinite {
                    what: "copy-paste range",
                })
            }
            _ => {}
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn steps(&self) -> &[AugmentationStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies the recorded steps, in order, to a point.
    pub fn apply_point(&self, mut p: Vec3) -> Vec3 {
        for step in &self.steps {
            p = forward(*step, p);
        }
        p
    }

    /// Undoes the recorded steps: inverses applied in reverse order.
    pub fn invert_point(&self, mut p: Vec3) -> Vec3 {
        for step in self.steps.iter().rev() {
            p = backward(*step, p);
        }
        p
    }

    /// Applies the recorded steps to a box (center, size, yaw move together).
    pub fn apply_box(&self, b: &BoundingBox3D) -> BoundingBox3D {
        let mut center = b.center;
        let mut size = b.size;
        let mut yaw = b.yaw;
        for step in &self.steps {
            match *step {
                AugmentationStep::GlobalRotation(a) => {
                    center = rotate_z(center, a);
                    yaw += a;
                }
                AugmentationStep::FlipAxis(Axis::X) => {
                    center.x = -center.x;
                    yaw = core::f64::consts::PI - yaw;
                }
                AugmentationStep::FlipAxis(Axis::Y) => {
                    center.y = -center.y;
                    yaw = -yaw;
                }
                AugmentationStep::GlobalScale(f) => {
                    center = center * f;
                    size = [size[0] * f, size[1] * f, size[2] * f];
                }
                AugmentationStep::CopyPaste { .. } => {}
            }
        }
        BoundingBox3D {
            center,
            size,
            yaw: normalize_angle(yaw),
        }
    }
}

fn rotate_z(p: Vec3, angle: f64) -> Vec3 {
    let (s, c) = (fm::sin(angle), fm::cos(angle));
    Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

fn forward(step: AugmentationStep, p: Vec3) -> Vec3 {
    match step {
        AugmentationStep::GlobalRotation(a) => rotate_z(p, a),
        AugmentationStep::FlipAxis(Axis::X) => Vec3::new(-p.x, p.y, p.z),
        AugmentationStep::FlipAxis(Axis::Y) => Vec3::new(p.x, -p.y, p.z),
        AugmentationStep::GlobalScale(f) => p * f,
        AugmentationStep::CopyPaste { .. } => p,
    }
}

fn backward(step: AugmentationStep, p: Vec3) -> Vec3 {
    match step {
        AugmentationStep::GlobalRotation(a) => rotate_z(p, -a),
        AugmentationStep::FlipAxis(Axis::X) => Vec3::new(-p.x, p.y, p.z),
        AugmentationStep::FlipAxis(Axis::Y) => Vec3::new(p.x, -p.y, p.z),
        AugmentationStep::GlobalScale(f) => p / f,
        AugmentationStep::CopyPaste { .. } => p,
    }
}

/// Undoes recorded augmentations on a whole cloud (features untouched).
pub fn inverse_augment(pc: &PointCloud, rec: &AugmentationRecord) -> Result<PointCloud, CoreError> {
    let positions = pc
        .positions()
        .iter()
        .map(|&p| rec.invert_point(p))
        .collect();
    match pc.features() {
        Some(f) => PointCloud::with_features(positions, f.clone()),
        None => PointCloud::new(positions),
    }
}

/// Applies recorded augmentations to a whole cloud.
pub fn apply_augment(pc: &PointCloud, rec: &AugmentationRecord) -> Result<PointCloud, CoreError> {
    let positions = pc
        .positions()
        .iter()
        .map(|&p| rec.apply_point(p))
        .collect();
    match pc.features() {
        Some(f) => PointCloud::with_features(positions, f.clone()),
        None => PointCloud::new(positions),
    }
}
