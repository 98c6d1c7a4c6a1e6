//! Query initialization: collapse the voxel grid, sample BEV voxels with
//! S-FPS, lift them to 3D reference points, and align content queries by
//! bilinear lookup on the BEV feature map.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geom::{BoundingBox3D, Vec3};
use crate::matrix::{row_affine, Matrix};
use crate::cloud::PointCloud;
use crate::sample::{sample, SampleRequest, Strategy};
use crate::voxel::{collapse_height, voxelize, BevFeatureMap, VoxelGridSpec, VoxelReducer};

/// Per-sampled-voxel lift offsets applied on top of a default height.
#[derive(Debug, Clone)]
pub struct LiftParams {
    pub offsets: Vec<Vec3>,
    pub base_height: f64,
}

impl LiftParams {
    pub fn new(offsets: Vec<Vec3>) -> Result<Self, CoreError> {
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "lift offsets",
            });
        }
        Ok(LiftParams {
            offsets,
            base_height: 0.0,
        })
    }

    pub fn zeros(count: usize) -> Self {
        LiftParams {
            offsets: alloc::vec![Vec3::ZERO; count],
            base_height: 0.0,
        }
    }
}

/// Reference points plus aligned content queries. `provenance[i]` is the BEV
/// entry the i-th query was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub points: Vec<Vec3>,
    pub features: Matrix,
    pub provenance: Vec<usize>,
}

impl QuerySet {
    pub fn new(points: Vec<Vec3>, features: Matrix, provenance: Vec<usize>) -> Result<Self, CoreError> {
        if features.rows() != points.len() {
            return Err(CoreError::ShapeMismatch {
                expected: points.len(),
                got: features.rows(),
                what: "content query rows",
            });
        }
        if points.iter().any(|p| !p.is_finite()) || !features.is_finite() {
            return Err(CoreError::NonFinite {
                what: "query set",
            });
        }
        Ok(QuerySet {
            points,
            features,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lifts 2D voxel centers to 3D reference points: `(cx + dx, cy + dy, z0 + dz)`.
pub fn lift(centers: &[[f64; 2]], params: &LiftParams) -> Result<Vec<Vec3>, CoreError> {
    if params.offsets.len() != centers.len() {
        return Err(CoreError::ShapeMismatch {
            expected: centers.len(),
            got: params.offsets.len(),
            what: "lift offsets",
        });
    }
    Ok(centers
        .iter()
        .zip(&params.offsets)
        .map(|(c, o)| Vec3::new(c[0] + o.x, c[1] + o.y, params.base_height + o.z))
        .collect())
}

/// Foreground surrogate score for a BEV center: 1 when the center is inside
/// any box (height ignored), else 0, smoothed into [0.1, 1.0] so weighted
/// sampling never zeroes a candidate out entirely.
pub fn foreground_scores(centers: &[[f64; 2]], boxes: &[BoundingBox3D]) -> Vec<f64> {
    centers
        .iter()
        .map(|c| {
            let p = Vec3::new(c[0], c[1], 0.0);
            let inside = boxes.iter().any(|b| b.contains(p, true));
            if inside {
                1.0
            } else {
                0.1
            }
        })
        .collect()
}

/// Oracle lift offsets: the vector from a foreground center to its nearest
/// containing box center (so lifted references land on box centers);
/// background centers get zero.
pub fn oracle_offsets(centers: &[[f64; 2]], boxes: &[BoundingBox3D]) -> Vec<Vec3> {
    centers
        .iter()
        .map(|c| {
            let p = Vec3::new(c[0], c[1], 0.0);
            let mut best: Option<(f64, Vec3)> = None;
            for b in boxes {
                if !b.contains(p, true) {
                    continue;
                }
                let d = p.xy_distance(b.center);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, b.center - p));
                }
            }
            best.map_or(Vec3::ZERO, |(_, o)| o)
        })
        .collect()
}

/// Applies one shared affine map to every cell of a BEV feature map. A
/// stand-in for the lightweight convolution stack that would otherwise
/// refine the raster; identity when not configured.
pub fn cellwise_linear(
    map: &BevFeatureMap,
    weights: &Matrix,
    bias: &[f64],
) -> Result<BevFeatureMap, CoreError> {
    let spec = map.spec().clone();
    let mut out = Matrix::empty(weights.cols());
    for ix in 0..spec.extents[0] {
        for iy in 0..spec.extents[1] {
            out.push_row(&row_affine(map.cell(ix, iy), weights, bias)?)?;
        }
    }
    BevFeatureMap::from_dense(spec, weights.cols(), out.data().to_vec())
}

/// End-to-end query initialization. Voxelizes the cloud, collapses to BEV,
/// scores cells by box containment, samples `count` of them with S-FPS,
/// lifts foreground cells toward their box centers, and reads content
/// queries off `bev_map` at the lifted positions.
pub fn init_queries(
    pc: &PointCloud,
    boxes: &[BoundingBox3D],
    bev_map: &BevFeatureMap,
    spec: &VoxelGridSpec,
    count: usize,
) -> Result<QuerySet, CoreError> {
    let grid = voxelize(pc, spec, VoxelReducer::Max)?;
    let bev = collapse_height(&grid);
    let centers: Vec<[f64; 2]> = (0..bev.len()).map(|i| bev.center(i)).collect();
    let scores = foreground_scores(&centers, boxes);

    let candidates: Vec<Vec3> = centers.iter().map(|c| Vec3::new(c[0], c[1], 0.0)).collect();
    let picked = sample(&SampleRequest::new(candidates, scores, count, Strategy::SFps)?)?;

    let sampled_centers: Vec<[f64; 2]> = picked.indices.iter().map(|&i| centers[i]).collect();
    let offsets = oracle_offsets(&sampled_centers, boxes);
    let refs = lift(&sampled_centers, &LiftParams::new(offsets)?)?;

    let mut features = Matrix::empty(bev_map.dim());
    for r in &refs {
        features.push_row(&bev_map.lookup([r.x, r.y])?)?;
    }

    QuerySet::new(refs, features, picked.indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::voxel::densify;

    fn unit_spec(extent: usize) -> VoxelGridSpec {
        VoxelGridSpec::new(Vec3::ZERO, [1.0, 1.0, 1.0], [extent, extent, 4]).unwrap()
    }

    #[test]
    fn lift_zero_offsets_is_identity_at_ground() {
        let centers = [[2.0, 3.0], [4.0, 5.0]];
        let refs = lift(&centers, &LiftParams::zeros(2)).unwrap();
        assert_eq!(refs[0], Vec3::new(2.0, 3.0, 0.0));
        assert_eq!(refs[1], Vec3::new(4.0, 5.0, 0.0));
    }

    #[test]
    fn lift_hand_case() {
        let refs = lift(
            &[[2.0, 3.0]],
            &LiftParams::new(alloc::vec![Vec3::new(1.0, -1.0, 0.5)]).unwrap(),
        )
        .unwrap();
        assert_eq!(refs[0], Vec3::new(3.0, 2.0, 0.5));
    }

    #[test]
    fn oracle_offsets_land_on_box_centers() {
        let b = BoundingBox3D::new(Vec3::new(3.0, 3.0, 0.8), [2.0, 2.0, 1.6], 0.4).unwrap();
        let centers = [[2.5, 3.5], [3.2, 2.9]];
        let offsets = oracle_offsets(&centers, &[b]);
        let refs = lift(&centers, &LiftParams::new(offsets).unwrap()).unwrap();
        for r in refs {
            assert!(r.distance(b.center) < 1e-12);
        }
    }

    fn scene() -> (PointCloud, Vec<BoundingBox3D>) {
        let mut rng = SeededRng::new(41);
        let b = BoundingBox3D::new(Vec3::new(4.0, 4.0, 1.0), [3.0, 2.0, 2.0], 0.3).unwrap();
        let mut pts = Vec::new();
        for _ in 0..60 {
            pts.push(Vec3::new(
                rng.uniform(0.0, 8.0),
                rng.uniform(0.0, 8.0),
                rng.uniform(0.0, 3.0),
            ));
        }
        for _ in 0..40 {
            pts.push(Vec3::new(
                b.center.x + rng.uniform(-1.0, 1.0),
                b.center.y + rng.uniform(-0.8, 0.8),
                rng.uniform(0.2, 1.8),
            ));
        }
        (PointCloud::new(pts).unwrap(), alloc::vec![b])
    }

    #[test]
    fn single_box_single_query_lands_near_box_center() {
        let (pc, boxes) = scene();
        let spec = unit_spec(8);
        let grid = voxelize(&pc, &spec, VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&grid));
        let q = init_queries(&pc, &boxes, &map, &spec, 1).unwrap();
        assert_eq!(q.len(), 1);
        // S-FPS seeds at the argmax-score (foreground) voxel, whose oracle
        // offset points exactly at the box center
        let diag = (spec.cell_size[0] * spec.cell_size[0]
            + spec.cell_size[1] * spec.cell_size[1])
            .sqrt();
        assert!(q.points[0].xy_distance(boxes[0].center) < diag);
    }

    #[test]
    fn zero_bev_map_gives_zero_content_queries() {
        let (pc, _) = scene();
        let spec = unit_spec(8);
        let zero_map =
            BevFeatureMap::from_dense(spec.bev(), 3, alloc::vec![0.0; 8 * 8 * 3]).unwrap();
        let q = init_queries(&pc, &[], &zero_map, &spec, 4).unwrap();
        assert!(q.features.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exhaustive_zero_offset_selection_recovers_bev_centers() {
        let (pc, _) = scene();
        let spec = unit_spec(8);
        let grid = voxelize(&pc, &spec, VoxelReducer::Max).unwrap();
        let bev = collapse_height(&grid);
        let map = densify(&bev);
        // no boxes: every offset is zero, so reference xy = sampled centers
        let q = init_queries(&pc, &[], &map, &spec, bev.len()).unwrap();
        let mut got: Vec<[i64; 2]> = q
            .points
            .iter()
            .map(|p| [(p.x * 2.0) as i64, (p.y * 2.0) as i64])
            .collect();
        let mut want: Vec<[i64; 2]> = (0..bev.len())
            .map(|i| {
                let c = bev.center(i);
                [(c[0] * 2.0) as i64, (c[1] * 2.0) as i64]
            })
            .collect();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
        for p in &q.points {
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn content_query_on_cell_center_is_exact() {
        let (pc, _) = scene();
        let spec = unit_spec(8);
        let grid = voxelize(&pc, &spec, VoxelReducer::Max).unwrap();
        let bev = collapse_height(&grid);
        let map = densify(&bev);
        // zero offsets put every reference on a BEV cell center; bilinear
        // must return that exact row (feature alignment mechanism)
        let q = init_queries(&pc, &[], &map, &spec, bev.len()).unwrap();
        for (i, &entry) in q.provenance.iter().enumerate() {
            assert_eq!(q.features.row(i), bev.feature(entry));
        }
    }

    #[test]
    fn sampled_references_are_distinct() {
        let (pc, boxes) = scene();
        let spec = unit_spec(8);
        let grid = voxelize(&pc, &spec, VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&grid));
        let q = init_queries(&pc, &boxes, &map, &spec, 8).unwrap();
        for i in 0..q.len() {
            for j in (i + 1)..q.len() {
                assert!(q.provenance[i] != q.provenance[j]);
            }
        }
    }

    #[test]
    fn cellwise_linear_maps_every_cell() {
        let (pc, _) = scene();
        let spec = unit_spec(8);
        let grid = voxelize(&pc, &spec, VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&grid));
        let w = Matrix::from_vec(4, 2, alloc::vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let out = cellwise_linear(&map, &w, &[10.0, 20.0]).unwrap();
        assert_eq!(out.dim(), 2);
        let c = map.cell(3, 4);
        assert_eq!(out.cell(3, 4), &[c[0] + 10.0, c[1] + 20.0]);
    }
}
