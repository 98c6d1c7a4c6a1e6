//! Detection losses: voxel segmentation cross entropy, foreground offset
//! smooth-L1, centerness targets with soft-label classification cross
//! entropy, and the decoupled box regression triple (center / size / angle).
//!
//! Probabilities are clamped to `[1e-7, 1 - 1e-7]` before any logarithm.
//! Every smooth-L1 uses beta = 1.0 unless the caller says otherwise.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fm;
use crate::geom::{BoundingBox3D, Vec3};

pub const PROB_EPS: f64 = 1e-7;

/// Per-component smooth-L1: quadratic `0.5 e^2 / beta` inside `|e| < beta`,
/// linear `|e| - 0.5 beta` outside.
pub fn smooth_l1(error: f64, beta: f64) -> f64 {
    let a = fm::abs(error);
    if a < beta {
        0.5 * a * a / beta
    } else {
        a - 0.5 * beta
    }
}

fn binary_ce(prob: f64, target: f64) -> f64 {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(target * fm::ln(p) + (1.0 - target) * fm::ln(1.0 - p))
}

/// Predicted foreground probability and binary label per non-empty voxel.
#[derive(Debug, Clone, Default)]
pub struct SegBatch {
    pub probs: Vec<f64>,
    pub labels: Vec<bool>,
}

/// Mean binary cross entropy over all voxels.
pub fn seg_loss(batch: &SegBatch) -> Result<f64, CoreError> {
    if batch.probs.is_empty() || batch.probs.len() != batch.labels.len() {
        return Err(CoreError::EmptyBatch);
    }
    let total: f64 = batch
        .probs
        .iter()
        .zip(&batch.labels)
        .map(|(&p, &l)| binary_ce(p, if l { 1.0 } else { 0.0 }))
        .sum();
    Ok(total / batch.probs.len() as f64)
}

/// Predicted and target lift offsets for foreground voxels only.
#[derive(Debug, Clone, Default)]
pub struct OffsetBatch {
    pub pred: Vec<Vec3>,
    pub target: Vec<Vec3>,
}

/// Mean over foreground rows of the per-component smooth-L1 summed over the
/// three components. Empty batches are an error so the zero-foreground case
/// stays an explicit caller decision.
pub fn offset_loss(batch: &OffsetBatch, beta: f64) -> Result<f64, CoreError> {
    if batch.pred.is_empty() || batch.pred.len() != batch.target.len() {
        return Err(CoreError::EmptyBatch);
    }
    let total: f64 = batch
        .pred
        .iter()
        .zip(&batch.target)
        .map(|(p, t)| {
            smooth_l1(p.x - t.x, beta) + smooth_l1(p.y - t.y, beta) + smooth_l1(p.z - t.z, beta)
        })
        .sum();
    Ok(total / batch.pred.len() as f64)
}

/// Centerness label of a reference point inside a box: the geometric mean of
/// the near/far face-distance ratios along the three box axes. 1 at the
/// exact center, 0 on any face, 0 outside.
pub fn centerness_target(p: Vec3, b: &BoundingBox3D) -> f64 {
    if !b.contains(p, false) {
        return 0.0;
    }
    let l = b.to_local(p);
    let half = [b.size[0] * 0.5, b.size[1] * 0.5, b.size[2] * 0.5];
    let coords = [l.x, l.y, l.z];
    let mut product = 1.0;
    for a in 0..3 {
        let near = half[a] - coords[a];
        let far = half[a] + coords[a];
        product *= near.min(far) / near.max(far);
    }
    fm::cbrt(product)
}

/// Predicted score and centerness label per reference point.
#[derive(Debug, Clone, Default)]
pub struct ClsBatch {
    pub probs: Vec<f64>,
    pub labels: Vec<f64>,
}

/// Mean soft-label binary cross entropy over all reference points.
pub fn cls_loss(batch: &ClsBatch) -> Result<f64, CoreError> {
    if batch.probs.is_empty() || batch.probs.len() != batch.labels.len() {
        return Err(CoreError::EmptyBatch);
    }
    let total: f64 = batch
        .probs
        .iter()
        .zip(&batch.labels)
        .map(|(&p, &t)| binary_ce(p, t))
        .sum();
    Ok(total / batch.probs.len() as f64)
}

/// Decoupled regression loss components, each a mean over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegLoss {
    /// Smooth-L1 over the center delta, summed across x/y/z.
    pub center: f64,
    /// Smooth-L1 over log size ratios, summed across the three extents.
    pub size: f64,
    /// Smooth-L1 of `sin(delta yaw)`. Periodic: a pi flip scores zero, the
    /// known ambiguity of a bin-free sine term.
    pub angle: f64,
}

/// Regression over foreground (predicted, target) box pairs.
pub fn reg_loss(pairs: &[(BoundingBox3D, BoundingBox3D)], beta: f64) -> Result<RegLoss, CoreError> {
    if pairs.is_empty() {
        return Err(CoreError::EmptyBatch);
    }
    let mut center = 0.0;
    let mut size = 0.0;
    let mut angle = 0.0;
    for (pred, target) in pairs {
        let dc = pred.center - target.center;
        center += smooth_l1(dc.x, beta) + smooth_l1(dc.y, beta) + smooth_l1(dc.z, beta);
        for a in 0..3 {
            size += smooth_l1(fm::ln(pred.size[a] / target.size[a]), beta);
        }
        angle += smooth_l1(fm::sin(pred.yaw - target.yaw), beta);
    }
    let n = pairs.len() as f64;
    Ok(RegLoss {
        center: center / n,
        size: size / n,
        angle: angle / n,
    })
}
