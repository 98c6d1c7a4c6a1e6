//! Virtual range image: a spherical raster over (possibly multi-sensor,
//! multi-frame) points where each pixel holds an index range into one sorted
//! point array, plus the range-view ball query built on it.
//!
//! Pixels are CSR buckets: points are counting-sorted by pixel id (stable in
//! original order), and `offsets[p]..offsets[p+1]` delimits pixel `p`'s
//! points. Several returns may share a pixel; the bucket just gets longer.
//!
//! The ball query visits only the `s x s` pixel window around a query's
//! pixel (azimuth wraps, inclination clips), checks true Euclidean distance
//! against the radius, and keeps at most `k` neighbors either by seeded
//! uniform sampling or by window scan order. Per-query work is bounded by
//! the window's bucket sizes, independent of total point count; the
//! brute-force counterpart in this module is the oracle it is tested
//! against.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::CoreError;
use crate::fm;
use crate::geom::{
    cartesian_to_spherical, spherical_to_cartesian, RigidTransform, SphericalCoordinate, Vec3,
};
use crate::rng::SeededRng;

use core::f64::consts::PI;

/// Raster geometry: `rows` inclination bins over `[incl_min, incl_max]`
/// (out-of-bounds inclinations clamp to the edge rows) and `cols` azimuth
/// bins covering the full circle with wraparound.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImageSpec {
    pub rows: usize,
    pub cols: usize,
    pub incl_min: f64,
    pub incl_max: f64,
}

impl RangeImageSpec {
    pub fn new(rows: usize, cols: usize, incl_min: f64, incl_max: f64) -> Result<Self, CoreError> {
        if rows == 0 || cols == 0 || !(incl_min < incl_max) {
            return Err(CoreError::NonFinite {
                what: "range image spec",
            });
        }
        Ok(RangeImageSpec {
            rows,
            cols,
            incl_min,
            incl_max,
        })
    }

    /// Typical spinning-LiDAR raster: 64 x 2048 over [-25 deg, 15 deg].
    pub fn spinning_64x2048() -> Self {
        RangeImageSpec {
            rows: 64,
            cols: 2048,
            incl_min: -25.0 * PI / 180.0,
            incl_max: 15.0 * PI / 180.0,
        }
    }

    /// Column of an azimuth in `(-pi, pi]`, floor binning with wraparound.
    pub fn col_of(&self, azimuth: f64) -> usize {
        let t = (azimuth + PI) / (2.0 * PI);
        let c = fm::floor(t * self.cols as f64) as i64;
        c.rem_euclid(self.cols as i64) as usize
    }

    /// Row of an inclination, floor binning clamped to the edge rows.
    pub fn row_of(&self, inclination: f64) -> usize {
        let u = (inclination - self.incl_min) / (self.incl_max - self.incl_min);
        let r = fm::floor(u * self.rows as f64);
        if r < 0.0 {
            0
        } else if r >= self.rows as f64 {
            self.rows - 1
        } else {
            r as usize
        }
    }

    pub fn pixel_of(&self, s: &SphericalCoordinate) -> usize {
        self.row_of(s.inclination) * self.cols + self.col_of(s.azimuth)
    }

    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }
}

/// One stored return: spherical and Cartesian coordinates in the sensor
/// frame, plus the point's index in the source cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoredPoint {
    pub spherical: SphericalCoordinate,
    pub cartesian: Vec3,
    pub original: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualRangeImage {
    spec: RangeImageSpec,
    ref_to_sensor: RigidTransform,
    points: Vec<StoredPoint>,
    offsets: Vec<u32>,
}

impl VirtualRangeImage {
    /// Builds the image from reference-frame points. `sensor_to_ref` maps
    /// sensor coordinates to the reference (car) frame; points are pulled
    /// back through its inverse before spherical conversion.
    pub fn build(pc: &PointCloud, sensor_to_ref: &RigidTransform, spec: RangeImageSpec) -> Self {
        let ref_to_sensor = sensor_to_ref.inverse();
        let n = pc.len();
        let mut pixels: Vec<u32> = Vec::with_capacity(n);
        let mut stored: Vec<StoredPoint> = Vec::with_capacity(n);
        for (i, &p) in pc.positions().iter().enumerate() {
            let cartesian = ref_to_sensor.apply(p);
            let spherical = cartesian_to_spherical(cartesian);
            pixels.push(spec.pixel_of(&spherical) as u32);
            stored.push(StoredPoint {
                spherical,
                cartesian,
                original: i as u32,
            });
        }

        // counting sort by pixel id, stable in original point order
        let mut offsets = vec![0u32; spec.pixel_count() + 1];
        for &p in &pixels {
            offsets[p as usize + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut cursor = offsets.clone();
        let mut points = vec![
            StoredPoint {
                spherical: SphericalCoordinate {
                    azimuth: 0.0,
                    inclination: 0.0,
                    range: 0.0,
                },
                cartesian: Vec3::ZERO,
                original: 0,
            };
            n
        ];
        for (sp, &pix) in stored.iter().zip(&pixels) {
            let slot = cursor[pix as usize];
            points[slot as usize] = *sp;
            cursor[pix as usize] += 1;
        }

        VirtualRangeImage {
            spec,
            ref_to_sensor,
            points,
            offsets,
        }
    }

    pub fn spec(&self) -> &RangeImageSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[StoredPoint] {
        &self.points
    }

    /// `(start, end)` range of a pixel's bucket in the sorted point array.
    pub fn pixel_range(&self, row: usize, col: usize) -> (usize, usize) {
        let p = row * self.spec.cols + col;
        (self.offsets[p] as usize, self.offsets[p + 1] as usize)
    }

    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    /// Maps a reference-frame point into the sensor's spherical coordinates.
    pub fn to_sensor_spherical(&self, p: Vec3) -> SphericalCoordinate {
        cartesian_to_spherical(self.ref_to_sensor.apply(p))
    }
}

/// How the ball query trims the kept set down to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Seeded uniform sample without replacement. Each query uses an
    /// independent child stream derived from the seed and the query index.
    Random { seed: u64 },
    /// First `k` passing the radius check in window scan order (top-left to
    /// bottom-right).
    Sequential,
}

#[derive(Debug, Clone)]
pub struct BallQueryRequest {
    pub queries: Vec<SphericalCoordinate>,
    pub radius: f64,
    pub max_neighbors: usize,
    /// Full window side in pixels. Even sizes split asymmetrically:
    /// offsets run from `-(s-1)/2` to `s/2` inclusive.
    pub kernel: usize,
    pub mode: SelectionMode,
}

impl BallQueryRequest {
    pub fn new(
        queries: Vec<SphericalCoordinate>,
        radius: f64,
        max_neighbors: usize,
        kernel: usize,
        mode: SelectionMode,
    ) -> Result<Self, CoreError> {
        if !(radius.is_finite() && radius > 0.0) || max_neighbors == 0 || kernel == 0 {
            return Err(CoreError::NonFinite {
                what: "ball query parameters",
            });
        }
        Ok(BallQueryRequest {
            queries,
            radius,
            max_neighbors,
            kernel,
            mode,
        })
    }
}

/// Per-query neighbor lists (original point indices, selection order).
/// A list shorter than `k` is its own validity mask: slots beyond `len` are
/// invalid; no duplicate padding is done.
#[derive(Debug, Clone, PartialEq)]
pub struct BallQueryResult {
    pub neighbors: Vec<Vec<u32>>,
    pub stats: BallQueryStats,
}

/// Instrumentation counters for complexity assertions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BallQueryStats {
    /// Total candidates whose distance was inspected.
    pub candidates_inspected: u64,
    /// Candidates inspected per query.
    pub per_query: Vec<u32>,
}

/// Range-view ball query over the image's pixel windows.
pub fn ball_query(img: &VirtualRangeImage, req: &BallQueryRequest) -> BallQueryResult {
    let spec = img.spec();
    let lo = -(((req.kernel - 1) / 2) as i64);
    let hi = (req.kernel / 2) as i64;
    let mut neighbors = Vec::with_capacity(req.queries.len());
    let mut stats = BallQueryStats::default();
    let base_rng = match req.mode {
        SelectionMode::Random { seed } => Some(SeededRng::new(seed)),
        SelectionMode::Sequential => None,
    };

    for (qi, q) in req.queries.iter().enumerate() {
        let qc = spherical_to_cartesian(*q);
        let qrow = spec.row_of(q.inclination) as i64;
        let qcol = spec.col_of(q.azimuth) as i64;
        let sequential = base_rng.is_none();
        let mut kept: Vec<u32> = Vec::new();
        let mut inspected = 0u32;

        'window: for dr in lo..=hi {
            let row = qrow + dr;
            if row < 0 || row >= spec.rows as i64 {
                continue; // inclination clips at the raster edge
            }
            for dc in lo..=hi {
                let col = (qcol + dc).rem_euclid(spec.cols as i64) as usize; // azimuth wraps
                let (start, end) = img.pixel_range(row as usize, col);
                for sp in &img.points()[start..end] {
                    inspected += 1;
                    if sp.cartesian.distance(qc) < req.radius {
                        kept.push(sp.original);
                        if sequential && kept.len() == req.max_neighbors {
                            break 'window;
                        }
                    }
                }
            }
        }

        let chosen = match &base_rng {
            Some(rng) => {
                if kept.len() > req.max_neighbors {
                    let mut child = rng.derive(qi as u64);
                    child
                        .sample_without_replacement(kept.len(), req.max_neighbors)
                        .into_iter()
                        .map(|i| kept[i])
                        .collect()
                } else {
                    kept
                }
            }
            None => kept,
        };
        stats.candidates_inspected += inspected as u64;
        stats.per_query.push(inspected);
        neighbors.push(chosen);
    }

    BallQueryResult { neighbors, stats }
}

/// Exhaustive O(m*n) ball query over raw points: the baseline and the test
/// oracle. Same strict-< radius rule and the same random-selection rule as
/// the range-view path.
pub fn brute_force_ball_query(
    pc: &PointCloud,
    queries: &[Vec3],
    radius: f64,
    max_neighbors: usize,
    mode: SelectionMode,
) -> BallQueryResult {
    let mut neighbors = Vec::with_capacity(queries.len());
    let mut stats = BallQueryStats::default();
    let base_rng = match mode {
        SelectionMode::Random { seed } => Some(SeededRng::new(seed)),
        SelectionMode::Sequential => None,
    };

    for (qi, &q) in queries.iter().enumerate() {
        let mut kept: Vec<u32> = Vec::new();
        for (i, &p) in pc.positions().iter().enumerate() {
            if p.distance(q) < radius {
                kept.push(i as u32);
                if base_rng.is_none() && kept.len() == max_neighbors {
                    break;
                }
            }
        }
        stats.candidates_inspected += pc.len() as u64;
        stats.per_query.push(pc.len() as u32);
        let chosen = match &base_rng {
            Some(rng) => {
                if kept.len() > max_neighbors {
                    let mut child = rng.derive(qi as u64);
                    child
                        .sample_without_replacement(kept.len(), max_neighbors)
                        .into_iter()
                        .map(|i| kept[i])
                        .collect()
                } else {
                    kept
                }
            }
            None => kept,
        };
        neighbors.push(chosen);
    }

    BallQueryResult { neighbors, stats }
}

/// True when every point of `brute_kept` lies in the query's pixel window,
/// i.e. the window geometrically covers the ball. Under this condition the
/// range-view kept set must equal the brute-force set.
pub fn window_covers(
    img: &VirtualRangeImage,
    query: &SphericalCoordinate,
    kernel: usize,
    brute_kept: &[u32],
) -> bool {
    let spec = img.spec();
    let lo = -(((kernel - 1) / 2) as i64);
    let hi = (kernel / 2) as i64;
    let qrow = spec.row_of(query.inclination) as i64;
    let qcol = spec.col_of(query.azimuth) as i64;
    // index stored points by original id
    brute_kept.iter().all(|&orig| {
        let sp = img
            .points()
            .iter()
            .find(|s| s.original == orig)
            .expect("kept point is stored");
        let row = spec.row_of(sp.spherical.inclination) as i64;
        let col = spec.col_of(sp.spherical.azimuth) as i64;
        let dr = row - qrow;
        let mut dc = (col - qcol).rem_euclid(spec.cols as i64);
        if dc > spec.cols as i64 / 2 {
            dc -= spec.cols as i64;
        }
        (lo..=hi).contains(&dr) && (lo..=hi).contains(&dc)
    })
}
