//! Synthetic scene generation: car-sized boxes placed without overlap on a
//! ground disc, surface-sampled object points plus background clutter, all
//! driven by one seeded stream so identical specs reproduce identical scenes
//! bit for bit.

use std::fmt;

use pointvoxel_core::augment::{AugmentationRecord, AugmentationStep, Axis};
use pointvoxel_core::{BoundingBox3D, PointCloud, SeededRng, Vec3};

use crate::config::SceneSpec;

#[derive(Debug)]
pub enum SceneError {
    /// Could not place a non-overlapping box within the retry budget.
    PlacementFailure { attempts: usize },
    InvalidSpec(&'static str),
    Geometry(pointvoxel_core::CoreError),
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::PlacementFailure { attempts } => {
                write!(f, "box placement failed after {attempts} attempts")
            }
            SceneError::InvalidSpec(what) => write!(f, "invalid scene spec: {what}"),
            SceneError::Geometry(e) => write!(f, "scene geometry error: {e}"),
        }
    }
}

impl std::error::Error for SceneError {}

impl From<pointvoxel_core::CoreError> for SceneError {
    fn from(e: pointvoxel_core::CoreError) -> Self {
        SceneError::Geometry(e)
    }
}

const PLACEMENT_ATTEMPTS: usize = 200;

/// Generates `(cloud, boxes, augmentations)`. The returned record is empty:
/// a fresh scene has had nothing applied to it yet.
pub fn gen_scene(
    spec: &SceneSpec,
) -> Result<(PointCloud, Vec<BoundingBox3D>, AugmentationRecord), SceneError> {
    if !(spec.extent > 0.0) {
        return Err(SceneError::InvalidSpec("extent must be positive"));
    }
    if spec.noise_sigma < 0.0 {
        return Err(SceneError::InvalidSpec("noise_sigma must be non-negative"));
    }
    let mut rng = SeededRng::new(spec.seed);
    let boxes = place_boxes(spec, &mut rng)?;

    let mut points = Vec::new();
    for b in &boxes {
        sample_box_surface(b, spec.points_per_object, spec.noise_sigma, &mut rng, &mut points);
    }
    let radius = spec.extent * 0.5;
    for _ in 0..spec.background_points {
        let r = radius * rng.next_f64().sqrt();
        let theta = rng.uniform(-core::f64::consts::PI, core::f64::consts::PI);
        let z = rng.next_normal() * spec.noise_sigma;
        points.push(Vec3::new(r * theta.cos(), r * theta.sin(), z));
    }

    Ok((PointCloud::new(points)?, boxes, AugmentationRecord::new()))
}

fn place_boxes(spec: &SceneSpec, rng: &mut SeededRng) -> Result<Vec<BoundingBox3D>, SceneError> {
    let mut boxes: Vec<BoundingBox3D> = Vec::with_capacity(spec.objects);
    let half = spec.extent * 0.5;
    for _ in 0..spec.objects {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let size = [
                rng.uniform(3.2, 5.0),
                rng.uniform(1.6, 2.2),
                rng.uniform(1.4, 2.0),
            ];
            let margin = (size[0] * size[0] + size[1] * size[1]).sqrt() * 0.5;
            let limit = half - margin;
            if limit <= 0.0 {
                return Err(SceneError::InvalidSpec("extent too small for objects"));
            }
            let candidate = BoundingBox3D::new(
                Vec3::new(
                    rng.uniform(-limit, limit),
                    rng.uniform(-limit, limit),
                    size[2] * 0.5,
                ),
                size,
                rng.uniform(-core::f64::consts::PI, core::f64::consts::PI),
            )?;
            // conservative circumradius separation
            let ok = boxes.iter().all(|b| {
                let r_b = (b.size[0] * b.size[0] + b.size[1] * b.size[1]).sqrt() * 0.5;
                candidate.center.xy_distance(b.center) > margin + r_b
            });
            if ok {
                boxes.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SceneError::PlacementFailure {
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(boxes)
}

/// Uniform sample over the box surface (faces weighted by area), jittered by
/// gaussian noise, expressed in world coordinates.
fn sample_box_surface(
    b: &BoundingBox3D,
    count: usize,
    sigma: f64,
    rng: &mut SeededRng,
    out: &mut Vec<Vec3>,
) {
    let [l, w, h] = b.size;
    // face areas: +-x (w*h), +-y (l*h), +-z (l*w)
    let areas = [w * h, w * h, l * h, l * h, l * w, l * w];
    let total: f64 = areas.iter().sum();
    let (sin_yaw, cos_yaw) = (b.yaw.sin(), b.yaw.cos());
    for _ in 0..count {
        let mut pick = rng.next_f64() * total;
        let mut face = 0;
        for (i, a) in areas.iter().enumerate() {
            if pick < *a {
                face = i;
                break;
            }
            pick -= a;
        }
        let u = rng.uniform(-0.5, 0.5);
        let v = rng.uniform(-0.5, 0.5);
        let local = match face {
            0 => Vec3::new(l * 0.5, w * u, h * v),
            1 => Vec3::new(-l * 0.5, w * u, h * v),
            2 => Vec3::new(l * u, w * 0.5, h * v),
            3 => Vec3::new(l * u, -w * 0.5, h * v),
            4 => Vec3::new(l * u, w * v, h * 0.5),
            _ => Vec3::new(l * u, w * v, -h * 0.5),
        };
        let world = Vec3::new(
            b.center.x + cos_yaw * local.x - sin_yaw * local.y,
            b.center.y + sin_yaw * local.x + cos_yaw * local.y,
            b.center.z + local.z,
        );
        let noise = Vec3::new(
            rng.next_normal() * sigma,
            rng.next_normal() * sigma,
            rng.next_normal() * sigma,
        );
        out.push(world + noise);
    }
}

/// Seeded augmentation chain cycling rotation, flip, and scale steps.
pub fn random_augmentations(steps: usize, seed: u64) -> AugmentationRecord {
    let mut rng = SeededRng::new(seed);
    let mut rec = AugmentationRecord::new();
    for i in 0..steps {
        let step = match i % 3 {
            0 => AugmentationStep::GlobalRotation(rng.uniform(-0.785, 0.785)),
            1 => {
                if rng.next_below(2) == 0 {
                    AugmentationStep::FlipAxis(Axis::X)
                } else {
                    AugmentationStep::FlipAxis(Axis::Y)
                }
            }
            _ => AugmentationStep::GlobalScale(rng.uniform(0.95, 1.05)),
        };
        rec.push(step).expect("generated steps are valid");
    }
    rec
}
