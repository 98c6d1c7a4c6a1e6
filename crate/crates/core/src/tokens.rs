//! Voxel-token and point-token generation around reference points.
//!
//! Voxel tokens are a seeded uniform sample of occupied voxels within a
//! large radius (long-range context at voxel-center positions); point tokens
//! come from the range-image ball query within a small radius and carry
//! exact point positions with features interpolated from nearby voxels.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geom::Vec3;
use crate::knn::{conquer_fetch_knn, interpolate_knn, KnnRequest};
use crate::matrix::Matrix;
use crate::range_image::{ball_query, BallQueryRequest, SelectionMode, VirtualRangeImage};
use crate::rng::SeededRng;
use crate::voxel::SparseVoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Voxel,
    Point,
}

/// Attention key/value entries: coordinates plus feature rows, with a
/// validity mask. Masked rows take no part in attention.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSet {
    pub coords: Vec<Vec3>,
    pub features: Matrix,
    pub kinds: Vec<TokenKind>,
    pub valid: Vec<bool>,
}

impl TokenSet {
    pub fn empty(dim: usize) -> Self {
        TokenSet {
            coords: Vec::new(),
            features: Matrix::empty(dim),
            kinds: Vec::new(),
            valid: Vec::new(),
        }
    }

    pub fn new(
        coords: Vec<Vec3>,
        features: Matrix,
        kinds: Vec<TokenKind>,
        valid: Vec<bool>,
    ) -> Result<Self, CoreError> {
        let n = coords.len();
        if features.rows() != n || kinds.len() != n || valid.len() != n {
            return Err(CoreError::ShapeMismatch {
                expected: n,
                got: features.rows().min(kinds.len()).min(valid.len()),
                what: "token set rows",
            });
        }
        Ok(TokenSet {
            coords,
            features,
            kinds,
            valid,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn push(
        &mut self,
        coord: Vec3,
        feature: &[f64],
        kind: TokenKind,
        valid: bool,
    ) -> Result<(), CoreError> {
        self.features.push_row(feature)?;
        self.coords.push(coord);
        self.kinds.push(kind);
        self.valid.push(valid);
        Ok(())
    }

    /// Concatenation, e.g. `[voxel tokens, point tokens]`.
    pub fn concat(mut self, other: TokenSet) -> Result<TokenSet, CoreError> {
        if other.dim() != self.dim() {
            return Err(CoreError::ShapeMismatch {
                expected: self.dim(),
                got: other.dim(),
                what: "token feature dim",
            });
        }
        for i in 0..other.len() {
            self.push(
                other.coords[i],
                other.features.row(i),
                other.kinds[i],
                other.valid[i],
            )?;
        }
        Ok(self)
    }
}

/// Uniformly samples up to `count` occupied voxels whose centers lie within
/// `radius` of the reference point. Coordinates are voxel centers.
pub fn gen_voxel_tokens(
    reference: Vec3,
    grid: &SparseVoxelGrid,
    radius: f64,
    count: usize,
    rng: &mut SeededRng,
) -> TokenSet {
    let in_radius: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.center(i).distance(reference) < radius)
        .collect();
    let take = count.min(in_radius.len());
    let picks = rng.sample_without_replacement(in_radius.len(), take);
    let mut out = TokenSet::empty(grid.feature_dim());
    for p in picks {
        let entry = in_radius[p];
        out.push(
            grid.center(entry),
            grid.feature(entry),
            TokenKind::Voxel,
            true,
        )
        .expect("dim matches grid");
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct PointTokenParams {
    /// Ball query radius (meters).
    pub radius: f64,
    /// Neighbor points to sample.
    pub count: usize,
    /// Range-image window side in pixels.
    pub kernel: usize,
    /// Voxel neighbors per point for feature interpolation.
    pub knn_k: usize,
    /// Voxel KNN window half-width in cells.
    pub knn_window: usize,
}

/// Samples up to `count` points near the reference through the range-image
/// ball query and interpolates each point's feature from nearby voxels.
///
/// `query_point` is the reference expressed in the image's reference frame
/// (inverse-augmented when the scene was augmented); `positions` maps the
/// image's original point indices to working-frame coordinates. Points whose
/// KNN window holds no voxel are kept but masked.
pub fn gen_point_tokens(
    query_point: Vec3,
    img: &VirtualRangeImage,
    positions: &[Vec3],
    grid: &SparseVoxelGrid,
    params: &PointTokenParams,
    mode: SelectionMode,
) -> Result<TokenSet, CoreError> {
    let req = BallQueryRequest::new(
        alloc::vec![img.to_sensor_spherical(query_point)],
        params.radius,
        params.count,
        params.kernel,
        mode,
    )?;
    let picked = ball_query(img, &req);
    let sampled: Vec<Vec3> = picked.neighbors[0]
        .iter()
        .map(|&i| positions[i as usize])
        .collect();

    let mut out = TokenSet::empty(grid.feature_dim());
    if sampled.is_empty() {
        return Ok(out);
    }
    let knn = conquer_fetch_knn(&KnnRequest::new(
        &sampled,
        grid,
        params.knn_k,
        params.knn_window,
    )?);
    let zero = alloc::vec![0.0; grid.feature_dim()];
    for (i, &p) in sampled.iter().enumerate() {
        let neighbors = &knn.per_query[i];
        if neighbors.is_empty() {
            out.push(p, &zero, TokenKind::Point, false)?;
        } else {
            let feature = interpolate_knn(grid, p, neighbors)?;
            out.push(p, &feature, TokenKind::Point, true)?;
        }
    }
    Ok(out)
}
