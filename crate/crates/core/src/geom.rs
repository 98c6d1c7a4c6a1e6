//! Geometric domain types: 3D vectors, spherical coordinates, rigid
//! transforms, and yaw-oriented bounding boxes.
//!
//! Conventions fixed here and relied on everywhere else:
//! - azimuth is `atan2(y, x)` in `(-pi, pi]`, inclination `atan2(z, hypot)`
//!   in `[-pi/2, pi/2]`; the origin maps to all-zero spherical coordinates;
//! - yaw rotates about +z and is stored normalized to `(-pi, pi]`;
//! - all internal geometry is f64.

use core::f64::consts::PI;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::CoreError;
use crate::fm;

/// Normalizes an angle to `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// A point or displacement in 3D space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        fm::sqrt(self.norm_squared())
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn distance_squared(self, o: Vec3) -> f64 {
        (self - o).norm_squared()
    }

    /// Distance in the ground plane, ignoring z.
    pub fn xy_distance(self, o: Vec3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        fm::sqrt(dx * dx + dy * dy)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Spherical coordinate of a laser return: azimuth in `(-pi, pi]`,
/// inclination in `[-pi/2, pi/2]`, range in meters (>= 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoordinate {
    pub azimuth: f64,
    pub inclination: f64,
    pub range: f64,
}

/// Converts a Cartesian point to spherical coordinates. The origin maps to
/// `(0, 0, 0)` by convention, removing the undefined-angle case.
pub fn cartesian_to_spherical(p: Vec3) -> SphericalCoordinate {
    let horiz = fm::sqrt(p.x * p.x + p.y * p.y);
    let range = fm::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if range == 0.0 {
        return SphericalCoordinate {
            azimuth: 0.0,
            inclination: 0.0,
            range: 0.0,
        };
    }
    let mut azimuth = fm::atan2(p.y, p.x);
    // atan2 yields -pi only for y = -0.0; fold it onto +pi.
    if azimuth <= -PI {
        azimuth = PI;
    }
    SphericalCoordinate {
        azimuth,
        inclination: fm::atan2(p.z, horiz),
        range,
    }
}

pub fn spherical_to_cartesian(s: SphericalCoordinate) -> Vec3 {
    let (sin_az, cos_az) = (fm::sin(s.azimuth), fm::cos(s.azimuth));
    let (sin_in, cos_in) = (fm::sin(s.inclination), fm::cos(s.inclination));
    Vec3::new(
        s.range * cos_in * cos_az,
        s.range * cos_in * sin_az,
        s.range * sin_in,
    )
}

/// Rigid motion: proper rotation plus translation. The homogeneous form has
/// an orthonormal rotation block and last row `[0, 0, 0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rot: [[f64; 3]; 3],
    trans: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rot: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            trans: Vec3::ZERO,
        }
    }

    pub fn translation(t: Vec3) -> Self {
        RigidTransform {
            rot: RigidTransform::identity().rot,
            trans: t,
        }
    }

    /// Rotation by `angle` radians about +z.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = (fm::sin(angle), fm::cos(angle));
        RigidTransform {
            rot: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            trans: Vec3::ZERO,
        }
    }

    /// Builds from a homogeneous 4x4 matrix, rejecting non-rigid input:
    /// the rotation block must satisfy `max|R^T R - I| < 1e-9` with positive
    /// determinant, and the last row must be `[0, 0, 0, 1]`.
    pub fn from_matrix(m: &[[f64; 4]; 4]) -> Result<Self, CoreError> {
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(CoreError::NonFinite {
                what: "homogeneous last row",
            });
        }
        let mut rot = [[0.0; 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[i][j];
            }
        }
        let t = RigidTransform {
            rot,
            trans: Vec3::new(m[0][3], m[1][3], m[2][3]),
        };
        if !t.is_rigid() {
            return Err(CoreError::NonFinite {
                what: "rotation block (not orthonormal)",
            });
        }
        Ok(t)
    }

    pub fn as_matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rot;
        [
            [r[0][0], r[0][1], r[0][2], self.trans.x],
            [r[1][0], r[1][1], r[1][2], self.trans.y],
            [r[2][0], r[2][1], r[2][2], self.trans.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    fn is_rigid(&self) -> bool {
        let r = &self.rot;
        let mut max_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += r[k][i] * r[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max(fm::abs(dot - target));
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        max_dev < 1e-9 && det > 0.0 && self.trans.is_finite()
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rot;
        Vec3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + self.trans.x,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + self.trans.y,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + self.trans.z,
        )
    }

    /// Composition: `(a.compose(&b)).apply(p) == a.apply(b.apply(p))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rot = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += self.rot[i][k] * other.rot[k][j];
                }
                rot[i][j] = acc;
            }
        }
        RigidTransform {
            rot,
            trans: self.apply(other.trans),
        }
    }

    /// Inverse via transpose: `R^T, -R^T t`.
    pub fn inverse(&self) -> RigidTransform {
        let r = &self.rot;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let t = self.trans;
        let inv_t = Vec3::new(
            -(rt[0][0] * t.x + rt[0][1] * t.y + rt[0][2] * t.z),
            -(rt[1][0] * t.x + rt[1][1] * t.y + rt[1][2] * t.z),
            -(rt[2][0] * t.x + rt[2][1] * t.y + rt[2][2] * t.z),
        );
        RigidTransform {
            rot: rt,
            trans: inv_t,
        }
    }
}

/// Oriented 3D box: center, size (length along local x, width along local y,
/// height along z), yaw about +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox3D {
    pub center: Vec3,
    pub size: [f64; 3],
    pub yaw: f64,
}

impl BoundingBox3D {
    pub fn new(center: Vec3, size: [f64; 3], yaw: f64) -> Result<Self, CoreError> {
        if !(center.is_finite() && size.iter().all(|s| s.is_finite() && *s > 0.0) && yaw.is_finite())
        {
            return Err(CoreError::NonFinite {
                what: "bounding box parameters",
            });
        }
        Ok(BoundingBox3D {
            center,
            size,
            yaw: normalize_angle(yaw),
        })
    }

    /// Expresses `p` in the box frame (inverse-yaw rotation about the center).
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = p - self.center;
        let (s, c) = (fm::sin(-self.yaw), fm::cos(-self.yaw));
        Vec3::new(c * d.x - s * d.y, s * d.x + c * d.y, d.z)
    }

    /// Containment test with closed faces. With `ignore_height` the z extent
    /// is not checked (2D-voxel labeling).
    pub fn contains(&self, p: Vec3, ignore_height: bool) -> bool {
        let l = self.to_local(p);
        fm::abs(l.x) <= self.size[0] * 0.5
            && fm::abs(l.y) <= self.size[1] * 0.5
            && (ignore_height || fm::abs(l.z) <= self.size[2] * 0.5)
    }

    /// Corner-to-corner diagonal length.
    pub fn diagonal(&self) -> f64 {
        fm::sqrt(
            self.size[0] * self.size[0]
                + self.size[1] * self.size[1]
                + self.size[2] * self.size[2],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    const SQRT_2: f64 = core::f64::consts::SQRT_2;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn spherical_axis_aligned() {
        let s = cartesian_to_spherical(Vec3::new(1.0, 0.0, 0.0));
        assert_eq!((s.azimuth, s.inclination, s.range), (0.0, 0.0, 1.0));
    }

    #[test]
    fn spherical_origin_convention() {
        let s = cartesian_to_spherical(Vec3::ZERO);
        assert_eq!((s.azimuth, s.inclination, s.range), (0.0, 0.0, 0.0));
    }

    #[test]
    fn spherical_hand_case() {
        // (1, 1, sqrt 2): azimuth pi/4, inclination atan2(sqrt 2, sqrt 2) = pi/4, range 2.
        let s = cartesian_to_spherical(Vec3::new(1.0, 1.0, SQRT_2));
        assert_close(s.azimuth, PI / 4.0, 1e-12);
        assert_close(s.inclination, PI / 4.0, 1e-12);
        assert_close(s.range, 2.0, 1e-12);
    }

    #[test]
    fn spherical_azimuth_range_is_half_open() {
        // y = -0.0 with x < 0 is the one case where atan2 returns -pi.
        let s = cartesian_to_spherical(Vec3::new(-1.0, -0.0, 0.0));
        assert_eq!(s.azimuth, PI);
    }

    #[test]
    fn cartesian_axis_aligned() {
        let p = spherical_to_cartesian(SphericalCoordinate {
            azimuth: 0.0,
            inclination: 0.0,
            range: 1.0,
        });
        assert_close(p.x, 1.0, 1e-15);
        let p = spherical_to_cartesian(SphericalCoordinate {
            azimuth: PI / 2.0,
            inclination: 0.0,
            range: 2.0,
        });
        assert_close(p.x, 0.0, 1e-15);
        assert_close(p.y, 2.0, 1e-15);
    }

    #[test]
    fn cartesian_hand_case() {
        let p = spherical_to_cartesian(SphericalCoordinate {
            azimuth: PI / 4.0,
            inclination: PI / 4.0,
            range: 2.0,
        });
        assert_close(p.x, 1.0, 1e-12);
        assert_close(p.y, 1.0, 1e-12);
        assert_close(p.z, SQRT_2, 1e-12);
    }

    #[test]
    fn round_trip_random_points() {
        let mut rng = SeededRng::new(11);
        for _ in 0..10_000 {
            let p = Vec3::new(
                rng.uniform(-100.0, 100.0),
                rng.uniform(-100.0, 100.0),
                rng.uniform(-100.0, 100.0),
            );
            if p.norm() == 0.0 {
                continue;
            }
            let q = spherical_to_cartesian(cartesian_to_spherical(p));
            assert!(p.distance(q) < 1e-9, "{p:?} vs {q:?}");
        }
    }

    #[test]
    fn transform_inverse_consistency() {
        let mut rng = SeededRng::new(3);
        for _ in 0..1_000 {
            let t = RigidTransform::rotation_z(rng.uniform(-PI, PI)).compose(
                &RigidTransform::translation(Vec3::new(
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                )),
            );
            let p = Vec3::new(
                rng.uniform(-10.0, 10.0),
                rng.uniform(-10.0, 10.0),
                rng.uniform(-10.0, 10.0),
            );
            let back = t.inverse().apply(t.apply(p));
            assert!(p.distance(back) < 1e-9);
            // inverse(t) o t is the identity
            let id = t.inverse().compose(&t);
            assert!(id.apply(p).distance(p) < 1e-9);
        }
    }

    #[test]
    fn transform_composition_associative() {
        let a = RigidTransform::rotation_z(0.3);
        let b = RigidTransform::translation(Vec3::new(1.0, -2.0, 0.5));
        let c = RigidTransform::rotation_z(-1.1).compose(&RigidTransform::translation(Vec3::new(
            0.0, 0.0, 3.0,
        )));
        let p = Vec3::new(0.7, 0.2, -4.0);
        let left = a.compose(&b).compose(&c).apply(p);
        let right = a.compose(&b.compose(&c)).apply(p);
        assert!(left.distance(right) < 1e-9);
    }

    #[test]
    fn from_matrix_rejects_sheared_input() {
        let mut m = RigidTransform::identity().as_matrix();
        m[0][1] = 0.2;
        assert!(RigidTransform::from_matrix(&m).is_err());
        // reflection (negative determinant) is not rigid either
        let mut m = RigidTransform::identity().as_matrix();
        m[0][0] = -1.0;
        assert!(RigidTransform::from_matrix(&m).is_err());
    }

    #[test]
    fn box_contains_center_and_rejects_just_outside() {
        let b = BoundingBox3D::new(Vec3::new(1.0, 2.0, 3.0), [4.0, 2.0, 1.0], 0.7).unwrap();
        assert!(b.contains(b.center, false));
        let outside = b.center
            + Vec3::new(
                (b.size[0] * 0.5 + 1e-6) * fm::cos(b.yaw),
                (b.size[0] * 0.5 + 1e-6) * fm::sin(b.yaw),
                0.0,
            );
        assert!(!b.contains(outside, false));
    }

    #[test]
    fn box_contains_hand_rotated_case() {
        // size (2,2,2) at origin, yaw pi/2: the point (0.9, 0, 0) lies inside.
        let b = BoundingBox3D::new(Vec3::ZERO, [2.0, 2.0, 2.0], PI / 2.0).unwrap();
        assert!(b.contains(Vec3::new(0.9, 0.0, 0.0), false));
    }

    #[test]
    fn box_ignore_height() {
        let b = BoundingBox3D::new(Vec3::ZERO, [2.0, 2.0, 2.0], 0.0).unwrap();
        let above = Vec3::new(0.0, 0.0, 50.0);
        assert!(!b.contains(above, false));
        assert!(b.contains(above, true));
    }

    #[test]
    fn box_containment_rigid_invariance() {
        let mut rng = SeededRng::new(21);
        for _ in 0..1_000 {
            let b = BoundingBox3D::new(
                Vec3::new(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), 0.0),
                [
                    rng.uniform(0.5, 4.0),
                    rng.uniform(0.5, 4.0),
                    rng.uniform(0.5, 4.0),
                ],
                rng.uniform(-PI, PI),
            )
            .unwrap();
            let p = Vec3::new(
                rng.uniform(-4.0, 4.0),
                rng.uniform(-4.0, 4.0),
                rng.uniform(-2.0, 2.0),
            );
            let t = RigidTransform::rotation_z(rng.uniform(-PI, PI)).compose(
                &RigidTransform::translation(Vec3::new(
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                )),
            );
            let moved_box =
                BoundingBox3D::new(t.apply(b.center), b.size, b.yaw + rot_angle(&t)).unwrap();
            // Skip points within 1e-7 of a face, where rounding may flip the test.
            let l = b.to_local(p);
            let margin = [
                (fm::abs(l.x) - b.size[0] * 0.5).abs(),
                (fm::abs(l.y) - b.size[1] * 0.5).abs(),
                (fm::abs(l.z) - b.size[2] * 0.5).abs(),
            ];
            if margin.iter().any(|m| *m < 1e-7) {
                continue;
            }
            assert_eq!(b.contains(p, false), moved_box.contains(t.apply(p), false));
        }
    }

    fn rot_angle(t: &RigidTransform) -> f64 {
        let m = t.as_matrix();
        fm::atan2(m[1][0], m[0][0])
    }

    #[test]
    fn yaw_normalization() {
        let b = BoundingBox3D::new(Vec3::ZERO, [1.0, 1.0, 1.0], 3.0 * PI).unwrap();
        assert_close(b.yaw, PI, 1e-12);
        let b = BoundingBox3D::new(Vec3::ZERO, [1.0, 1.0, 1.0], -PI).unwrap();
        assert_close(b.yaw, PI, 1e-12);
    }
}
