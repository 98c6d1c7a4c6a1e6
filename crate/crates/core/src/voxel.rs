//! Sparse voxel grids, height collapse, and dense BEV rasters.
//!
//! Grids store their occupied cells sorted lexicographically by cell index,
//! so entry order is canonical and lookups are binary searches; no hashing,
//! no nondeterministic iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::CoreError;
use crate::fm;
use crate::geom::Vec3;
use crate::matrix::Matrix;

/// Axis-aligned voxelization lattice. A point maps to cell indices via
/// `floor((p - origin) / size)`; a point exactly on a cell's upper face
/// belongs to the next cell, and points on the grid's upper extent are
/// dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGridSpec {
    pub origin: Vec3,
    pub cell_size: [f64; 3],
    pub extents: [usize; 3],
}

impl VoxelGridSpec {
    pub fn new(origin: Vec3, cell_size: [f64; 3], extents: [usize; 3]) -> Result<Self, CoreError> {
        if !origin.is_finite()
            || cell_size.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || extents.contains(&0)
        {
            return Err(CoreError::NonFinite {
                what: "voxel grid spec",
            });
        }
        Ok(VoxelGridSpec {
            origin,
            cell_size,
            extents,
        })
    }

    /// Cell containing `p`, or `None` when outside the extents.
    pub fn cell_of(&self, p: Vec3) -> Option<[u32; 3]> {
        let rel = [
            (p.x - self.origin.x) / self.cell_size[0],
            (p.y - self.origin.y) / self.cell_size[1],
            (p.z - self.origin.z) / self.cell_size[2],
        ];
        let mut cell = [0u32; 3];
        for a in 0..3 {
            let i = fm::floor(rel[a]);
            if i < 0.0 || i >= self.extents[a] as f64 {
                return None;
            }
            cell[a] = i as u32;
        }
        Some(cell)
    }

    /// Cell containing `p` with out-of-extent coordinates clamped to the
    /// nearest edge cell. Used to anchor window searches for queries that
    /// fall outside the lattice.
    pub fn clamped_cell_of(&self, p: Vec3) -> [u32; 3] {
        let rel = [
            (p.x - self.origin.x) / self.cell_size[0],
            (p.y - self.origin.y) / self.cell_size[1],
            (p.z - self.origin.z) / self.cell_size[2],
        ];
        let mut cell = [0u32; 3];
        for a in 0..3 {
            let i = fm::floor(rel[a]);
            cell[a] = if i < 0.0 {
                0
            } else if i >= self.extents[a] as f64 {
                (self.extents[a] - 1) as u32
            } else {
                i as u32
            };
        }
        cell
    }

    /// Centroid of a cell.
    pub fn centroid(&self, cell: [u32; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + (cell[0] as f64 + 0.5) * self.cell_size[0],
            self.origin.y + (cell[1] as f64 + 0.5) * self.cell_size[1],
            self.origin.z + (cell[2] as f64 + 0.5) * self.cell_size[2],
        )
    }

    /// The 2D slice of this spec used by BEV grids.
    pub fn bev(&self) -> BevGridSpec {
        BevGridSpec {
            origin: [self.origin.x, self.origin.y],
            cell_size: [self.cell_size[0], self.cell_size[1]],
            extents: [self.extents[0], self.extents[1]],
        }
    }
}

/// 2D lattice over the ground plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BevGridSpec {
    pub origin: [f64; 2],
    pub cell_size: [f64; 2],
    pub extents: [usize; 2],
}

impl BevGridSpec {
    pub fn centroid(&self, cell: [u32; 2]) -> [f64; 2] {
        [
            self.origin[0] + (cell[0] as f64 + 0.5) * self.cell_size[0],
            self.origin[1] + (cell[1] as f64 + 0.5) * self.cell_size[1],
        ]
    }
}

/// How member-point feature rows are aggregated into a voxel feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelReducer {
    Mean,
    Max,
}

/// Occupied voxels with one feature row each, sorted by cell index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVoxelGrid {
    spec: VoxelGridSpec,
    cells: Vec<[u32; 3]>,
    features: Matrix,
}

impl SparseVoxelGrid {
    pub fn spec(&self) -> &VoxelGridSpec {
        &self.spec
    }

    /// Number of non-empty voxels.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[[u32; 3]] {
        &self.cells
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Representative center (cell centroid) of entry `i`.
    pub fn center(&self, i: usize) -> Vec3 {
        self.spec.centroid(self.cells[i])
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Entry index of a cell, if occupied.
    pub fn find(&self, cell: [u32; 3]) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }

    /// Replaces all feature rows, e.g. after an embedding step. Row count
    /// must match the entry count.
    pub fn with_features(&self, features: Matrix) -> Result<SparseVoxelGrid, CoreError> {
        if features.rows() != self.cells.len() {
            return Err(CoreError::ShapeMismatch {
                expected: self.cells.len(),
                got: features.rows(),
                what: "voxel feature rows",
            });
        }
        Ok(SparseVoxelGrid {
            spec: self.spec.clone(),
            cells: self.cells.clone(),
            features,
        })
    }
}

/// Occupied BEV cells with one feature row each, sorted by cell index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBevGrid {
    spec: BevGridSpec,
    cells: Vec<[u32; 2]>,
    features: Matrix,
}

impl SparseBevGrid {
    pub fn spec(&self) -> &BevGridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[[u32; 2]] {
        &self.cells
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn center(&self, i: usize) -> [f64; 2] {
        self.spec.centroid(self.cells[i])
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn find(&self, cell: [u32; 2]) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }
}

/// Dense BEV raster; absent cells are all-zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureMap {
    spec: BevGridSpec,
    dim: usize,
    data: Vec<f64>,
}

impl BevFeatureMap {
    /// Builds a raster directly from dense cell data laid out row-major by
    /// `(ix, iy)`.
    pub fn from_dense(spec: BevGridSpec, dim: usize, data: Vec<f64>) -> Result<Self, CoreError> {
        if data.len() != spec.extents[0] * spec.extents[1] * dim {
            return Err(CoreError::ShapeMismatch {
                expected: spec.extents[0] * spec.extents[1] * dim,
                got: data.len(),
                what: "dense raster length",
            });
        }
        Ok(BevFeatureMap { spec, dim, data })
    }

    pub fn spec(&self) -> &BevGridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self, ix: usize, iy: usize) -> &[f64] {
        let base = (ix * self.spec.extents[1] + iy) * self.dim;
        &self.data[base..base + self.dim]
    }

    fn cell_mut(&mut self, ix: usize, iy: usize) -> &mut [f64] {
        let base = (ix * self.spec.extents[1] + iy) * self.dim;
        &mut self.data[base..base + self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Bilinear lookup at a metric position. Cell values live at cell
    /// centers `(i + 0.5) * size + origin`; queries between the outermost
    /// centers and the raster boundary replicate the edge cell. Queries
    /// outside the metric extent are an error.
    pub fn lookup(&self, xy: [f64; 2]) -> Result<Vec<f64>, CoreError> {
        let g = self.grid_coords(xy)?;
        Ok(self.blend(g))
    }

    /// As [`lookup`](Self::lookup) but out-of-extent queries are clamped to
    /// the boundary instead of failing. Opt-in by design.
    pub fn lookup_clamped(&self, xy: [f64; 2]) -> Vec<f64> {
        let g = match self.grid_coords(xy) {
            Ok(g) => g,
            Err(_) => {
                let gx = (xy[0] - self.spec.origin[0]) / self.spec.cell_size[0];
                let gy = (xy[1] - self.spec.origin[1]) / self.spec.cell_size[1];
                [
                    gx.clamp(0.0, self.spec.extents[0] as f64),
                    gy.clamp(0.0, self.spec.extents[1] as f64),
                ]
            }
        };
        self.blend(g)
    }

    fn grid_coords(&self, xy: [f64; 2]) -> Result<[f64; 2], CoreError> {
        if !(xy[0].is_finite() && xy[1].is_finite()) {
            return Err(CoreError::OutOfBounds);
        }
        let gx = (xy[0] - self.spec.origin[0]) / self.spec.cell_size[0];
        let gy = (xy[1] - self.spec.origin[1]) / self.spec.cell_size[1];
        if gx < 0.0 || gx > self.spec.extents[0] as f64 || gy < 0.0 || gy > self.spec.extents[1] as f64
        {
            return Err(CoreError::OutOfBounds);
        }
        Ok([gx, gy])
    }

    fn blend(&self, g: [f64; 2]) -> Vec<f64> {
        let (x0, x1, fx) = neighbor_cells(g[0], self.spec.extents[0]);
        let (y0, y1, fy) = neighbor_cells(g[1], self.spec.extents[1]);
        let w00 = (1.0 - fx) * (1.0 - fy);
        let w01 = (1.0 - fx) * fy;
        let w10 = fx * (1.0 - fy);
        let w11 = fx * fy;
        let mut out = vec![0.0; self.dim];
        for (w, (ix, iy)) in [
            (w00, (x0, y0)),
            (w01, (x0, y1)),
            (w10, (x1, y0)),
            (w11, (x1, y1)),
        ] {
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.cell(ix, iy)) {
                *o += w * v;
            }
        }
        out
    }
}

/// Lower/upper neighbor cell and fractional weight along one axis, with
/// edge replication in the half-cell margin.
fn neighbor_cells(g: f64, extent: usize) -> (usize, usize, f64) {
    let u = g - 0.5;
    let i0f = fm::floor(u);
    let frac = u - i0f;
    let last = (extent - 1) as f64;
    let i0 = i0f.clamp(0.0, last) as usize;
    let i1 = (i0f + 1.0).clamp(0.0, last) as usize;
    (i0, i1, frac)
}

/// Assigns points to voxels and aggregates their feature rows. When the
/// cloud carries no features, each voxel gets a 4-dim surrogate: the mean
/// member offset from the cell centroid concatenated with the member count.
pub fn voxelize(
    pc: &PointCloud,
    spec: &VoxelGridSpec,
    reducer: VoxelReducer,
) -> Result<SparseVoxelGrid, CoreError> {
    let mut pairs: Vec<([u32; 3], u32)> = Vec::with_capacity(pc.len());
    for (i, &p) in pc.positions().iter().enumerate() {
        if let Some(cell) = spec.cell_of(p) {
            pairs.push((cell, i as u32));
        }
    }
    if pairs.is_empty() {
        return Err(CoreError::EmptyGrid);
    }
    pairs.sort_unstable();

    let dim = if pc.feature_dim() > 0 {
        pc.feature_dim()
    } else {
        4
    };
    let mut cells = Vec::new();
    let mut features = Matrix::empty(dim);

    let mut start = 0;
    while start < pairs.len() {
        let cell = pairs[start].0;
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 == cell {
            end += 1;
        }
        let members = &pairs[start..end];
        let row = match pc.features() {
            Some(feats) => reduce_rows(feats, members, reducer),
            None => surrogate_row(pc, spec, cell, members),
        };
        cells.push(cell);
        features.push_row(&row)?;
        start = end;
    }

    Ok(SparseVoxelGrid {
        spec: spec.clone(),
        cells,
        features,
    })
}

fn reduce_rows(feats: &Matrix, members: &[([u32; 3], u32)], reducer: VoxelReducer) -> Vec<f64> {
    let mut acc = feats.row(members[0].1 as usize).to_vec();
    for &(_, idx) in &members[1..] {
        for (a, v) in acc.iter_mut().zip(feats.row(idx as usize)) {
            match reducer {
                VoxelReducer::Mean => *a += v,
                VoxelReducer::Max => *a = a.max(*v),
            }
        }
    }
    if reducer == VoxelReducer::Mean {
        let n = members.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
    }
    acc
}

fn surrogate_row(
    pc: &PointCloud,
    spec: &VoxelGridSpec,
    cell: [u32; 3],
    members: &[([u32; 3], u32)],
) -> Vec<f64> {
    let centroid = spec.centroid(cell);
    let mut mean = Vec3::ZERO;
    for &(_, idx) in members {
        mean = mean + (pc.positions()[idx as usize] - centroid);
    }
    mean = mean / members.len() as f64;
    vec![mean.x, mean.y, mean.z, members.len() as f64]
}

/// Merges voxels sharing a horizontal location by elementwise max pooling.
pub fn collapse_height(grid: &SparseVoxelGrid) -> SparseBevGrid {
    let mut cells = Vec::new();
    let mut features = Matrix::empty(grid.feature_dim());
    // 3D cells are sorted by (ix, iy, iz), so each column is contiguous.
    let mut start = 0;
    while start < grid.len() {
        let key = [grid.cells()[start][0], grid.cells()[start][1]];
        let mut row = grid.feature(start).to_vec();
        let mut end = start + 1;
        while end < grid.len()
            && grid.cells()[end][0] == key[0]
            && grid.cells()[end][1] == key[1]
        {
            for (a, v) in row.iter_mut().zip(grid.feature(end)) {
                *a = a.max(*v);
            }
            end += 1;
        }
        cells.push(key);
        features.push_row(&row).expect("uniform dim");
        start = end;
    }
    SparseBevGrid {
        spec: grid.spec().bev(),
        cells,
        features,
    }
}

/// Converts a sparse BEV grid to a dense raster; empty cells become zero rows.
pub fn densify(bev: &SparseBevGrid) -> BevFeatureMap {
    let spec = bev.spec().clone();
    let dim = bev.feature_dim();
    let mut map = BevFeatureMap {
        data: vec![0.0; spec.extents[0] * spec.extents[1] * dim],
        spec,
        dim,
    };
    for (i, cell) in bev.cells().iter().enumerate() {
        map.cell_mut(cell[0] as usize, cell[1] as usize)
            .copy_from_slice(bev.feature(i));
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn spec() -> VoxelGridSpec {
        VoxelGridSpec::new(Vec3::ZERO, [1.0, 1.0, 1.0], [8, 8, 8]).unwrap()
    }

    fn cloud(points: &[[f64; 3]], feats: Option<(usize, &[f64])>) -> PointCloud {
        let pos: Vec<Vec3> = points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        match feats {
            Some((dim, data)) => PointCloud::with_features(
                pos,
                Matrix::from_vec(points.len(), dim, data.to_vec()).unwrap(),
            )
            .unwrap(),
            None => PointCloud::new(pos).unwrap(),
        }
    }

    #[test]
    fn singleton_voxel() {
        let pc = cloud(&[[2.5, 3.5, 1.5]], Some((1, &[2.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.cells()[0], [2, 3, 1]);
        assert_eq!(g.feature(0), &[2.0]);
    }

    #[test]
    fn max_reduction_is_elementwise() {
        let pc = cloud(
            &[[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]],
            Some((2, &[1.0, 5.0, 3.0, 2.0])),
        );
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.feature(0), &[3.0, 5.0]);
    }

    #[test]
    fn mean_reduction() {
        let pc = cloud(
            &[[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]],
            Some((2, &[1.0, 5.0, 3.0, 2.0])),
        );
        let g = voxelize(&pc, &spec(), VoxelReducer::Mean).unwrap();
        assert_eq!(g.feature(0), &[2.0, 3.5]);
    }

    #[test]
    fn distinct_cells_stay_distinct() {
        let pc = cloud(&[[0.5, 0.5, 0.5], [4.5, 0.5, 0.5]], None);
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn out_of_extent_points_are_dropped_and_empty_errors() {
        let pc = cloud(&[[100.0, 0.0, 0.0]], None);
        assert!(matches!(
            voxelize(&pc, &spec(), VoxelReducer::Max),
            Err(CoreError::EmptyGrid)
        ));
        // a point exactly on the upper extent is dropped too
        let pc = cloud(&[[8.0, 1.0, 1.0]], None);
        assert!(voxelize(&pc, &spec(), VoxelReducer::Max).is_err());
    }

    #[test]
    fn upper_face_boundary_goes_to_next_cell() {
        let pc = cloud(&[[1.0, 0.5, 0.5]], None);
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.cells()[0], [1, 0, 0]);
    }

    #[test]
    fn surrogate_feature_is_offset_and_count() {
        let pc = cloud(&[[0.25, 0.5, 0.5], [0.75, 0.5, 0.5]], None);
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.len(), 1);
        let f = g.feature(0);
        assert!((f[0]).abs() < 1e-12 && f[1].abs() < 1e-12 && f[2].abs() < 1e-12);
        assert_eq!(f[3], 2.0);
    }

    #[test]
    fn collapse_singleton() {
        let pc = cloud(&[[1.5, 2.5, 3.5]], Some((1, &[4.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let bev = collapse_height(&g);
        assert_eq!(bev.cells(), &[[1, 2]]);
        assert_eq!(bev.feature(0), &[4.0]);
    }

    #[test]
    fn collapse_takes_elementwise_max_over_column() {
        let pc = cloud(
            &[[0.5, 0.5, 0.5], [0.5, 0.5, 7.5]],
            Some((2, &[1.0, 5.0, 3.0, 2.0])),
        );
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        assert_eq!(g.len(), 2);
        let bev = collapse_height(&g);
        assert_eq!(bev.len(), 1);
        assert_eq!(bev.feature(0), &[3.0, 5.0]);
    }

    #[test]
    fn collapse_count_matches_distinct_horizontal_set() {
        let mut rng = crate::rng::SeededRng::new(17);
        let pts: Vec<[f64; 3]> = (0..500)
            .map(|_| {
                [
                    rng.uniform(0.0, 8.0),
                    rng.uniform(0.0, 8.0),
                    rng.uniform(0.0, 8.0),
                ]
            })
            .collect();
        let pc = cloud(&pts, None);
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let bev = collapse_height(&g);
        let horizontal: BTreeSet<[u32; 2]> =
            g.cells().iter().map(|c| [c[0], c[1]]).collect();
        assert_eq!(bev.len(), horizontal.len());
        assert!(bev.len() <= g.len());
    }

    #[test]
    fn collapse_is_idempotent_on_flat_grids() {
        let pc = cloud(&[[0.5, 0.5, 0.5], [3.5, 2.5, 0.5]], Some((1, &[1.0, 2.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let bev = collapse_height(&g);
        assert_eq!(bev.len(), g.len());
        for i in 0..g.len() {
            assert_eq!(bev.feature(i), g.feature(i));
        }
    }

    #[test]
    fn densify_zero_and_singleton() {
        let pc = cloud(&[[0.5, 1.5, 0.5]], Some((1, &[7.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        assert_eq!(map.cell(0, 1), &[7.0]);
        let nonzero = map.data().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn densify_conserves_sums() {
        let mut rng = crate::rng::SeededRng::new(4);
        let pts: Vec<[f64; 3]> = (0..200)
            .map(|_| {
                [
                    rng.uniform(0.0, 8.0),
                    rng.uniform(0.0, 8.0),
                    rng.uniform(0.0, 8.0),
                ]
            })
            .collect();
        let feats: Vec<f64> = (0..200 * 2).map(|_| rng.uniform(0.0, 1.0)).collect();
        let pc = cloud(&pts, Some((2, &feats)));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let bev = collapse_height(&g);
        let map = densify(&bev);
        let sparse_sum: f64 = bev.features().data().iter().sum();
        let dense_sum: f64 = map.data().iter().sum();
        assert!((sparse_sum - dense_sum).abs() < 1e-9);
    }

    #[test]
    fn bilinear_exact_on_cell_centers() {
        let pc = cloud(&[[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]], Some((1, &[3.0, 9.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        assert_eq!(map.lookup([0.5, 0.5]).unwrap(), vec![3.0]);
        assert_eq!(map.lookup([1.5, 0.5]).unwrap(), vec![9.0]);
        // edge-cell center is exact as well
        assert_eq!(map.lookup([7.5, 7.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn bilinear_symmetry_average() {
        // four cells valued 1,2,3,4; the equidistant query returns 2.5
        let pc = cloud(
            &[
                [0.5, 0.5, 0.5],
                [0.5, 1.5, 0.5],
                [1.5, 0.5, 0.5],
                [1.5, 1.5, 0.5],
            ],
            Some((1, &[1.0, 2.0, 3.0, 4.0])),
        );
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        let v = map.lookup([1.0, 1.0]).unwrap();
        assert!((v[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bilinear_quarter_offset() {
        // cells at x-centers 0.5 and 1.5 valued 0 and 4; query 1/4 of the way
        // between centers (x = 0.75) blends to 1.0
        let pc = cloud(&[[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]], Some((1, &[0.0, 4.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        let v = map.lookup([0.75, 0.5]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lookup_out_of_extent_errors_unless_clamped() {
        let pc = cloud(&[[0.5, 0.5, 0.5]], Some((1, &[5.0])));
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        assert!(matches!(
            map.lookup([-0.1, 0.5]),
            Err(CoreError::OutOfBounds)
        ));
        assert_eq!(map.lookup_clamped([-0.1, 0.5]), vec![5.0]);
    }

    #[test]
    fn bilinear_is_continuous() {
        let pc = cloud(
            &[
                [0.5, 0.5, 0.5],
                [1.5, 0.5, 0.5],
                [0.5, 1.5, 0.5],
                [1.5, 1.5, 0.5],
            ],
            Some((1, &[1.0, 7.0, -2.0, 11.0])),
        );
        let g = voxelize(&pc, &spec(), VoxelReducer::Max).unwrap();
        let map = densify(&collapse_height(&g));
        let mut rng = crate::rng::SeededRng::new(8);
        let spread = 13.0;
        for _ in 0..2_000 {
            let x = rng.uniform(0.1, 7.9);
            let y = rng.uniform(0.1, 7.9);
            let eps = 1e-6;
            let a = map.lookup([x, y]).unwrap()[0];
            let b = map.lookup([x + eps, y + eps]).unwrap()[0];
            assert!((a - b).abs() <= 4.0 * eps * spread);
        }
    }
}
