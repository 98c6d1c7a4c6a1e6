//! Voxel-window KNN, the conquer-fetch variant, the exhaustive oracle, and
//! inverse-distance feature interpolation.
//!
//! All three searches return voxel entries ranked by distance from query to
//! voxel center, ties broken by lowest cell index lexicographically. The
//! window searches scan the `(2v+1)^3` cells around the query's containing
//! cell; conquer-fetch first dedupes queries by containing cell so the
//! window is gathered once per distinct cell, then re-ranks per query by its
//! exact coordinates, which makes it bit-identical to the plain window
//! search.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geom::Vec3;
use crate::voxel::SparseVoxelGrid;

/// Below this center distance (meters) a query is treated as coincident with
/// the voxel and interpolation returns that voxel's feature exactly.
pub const COINCIDENT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct KnnRequest<'a> {
    pub queries: &'a [Vec3],
    pub grid: &'a SparseVoxelGrid,
    /// Neighbors per query.
    pub k: usize,
    /// Search window half-width in cells.
    pub window: usize,
}

impl<'a> KnnRequest<'a> {
    pub fn new(
        queries: &'a [Vec3],
        grid: &'a SparseVoxelGrid,
        k: usize,
        window: usize,
    ) -> Result<Self, CoreError> {
        if k == 0 || window == 0 {
            return Err(CoreError::InvalidCount {
                requested: k.min(window),
                available: 1,
            });
        }
        Ok(KnnRequest {
            queries,
            grid,
            k,
            window,
        })
    }
}

/// One ranked neighbor: a grid entry index and the query-to-center distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnNeighbor {
    pub entry: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    /// Up to `k` neighbors per query, distances non-decreasing.
    pub per_query: Vec<Vec<KnnNeighbor>>,
    pub stats: KnnStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnnStats {
    /// Number of `(2v+1)^3` window gathers performed.
    pub window_scans: u64,
    /// Cell lookups attempted across all gathers.
    pub cells_visited: u64,
}

/// Gathers the occupied entries in the window around `anchor`, in cell
/// lexicographic order.
fn gather_window(
    grid: &SparseVoxelGrid,
    anchor: [u32; 3],
    window: usize,
    stats: &mut KnnStats,
) -> Vec<u32> {
    stats.window_scans += 1;
    let v = window as i64;
    let ext = grid.spec().extents;
    let mut found = Vec::new();
    for dx in -v..=v {
        let ix = anchor[0] as i64 + dx;
        if ix < 0 || ix >= ext[0] as i64 {
            continue;
        }
        for dy in -v..=v {
            let iy = anchor[1] as i64 + dy;
            if iy < 0 || iy >= ext[1] as i64 {
                continue;
            }
            for dz in -v..=v {
                let iz = anchor[2] as i64 + dz;
                if iz < 0 || iz >= ext[2] as i64 {
                    continue;
                }
                stats.cells_visited += 1;
                if let Some(entry) = grid.find([ix as u32, iy as u32, iz as u32]) {
                    found.push(entry as u32);
                }
            }
        }
    }
    found
}

/// Ranks candidate entries for one query and keeps the `k` nearest.
/// Candidates must arrive in cell lexicographic order; the stable sort then
/// breaks distance ties toward the lower cell index.
fn rank(grid: &SparseVoxelGrid, query: Vec3, candidates: &[u32], k: usize) -> Vec<KnnNeighbor> {
    let mut ranked: Vec<KnnNeighbor> = candidates
        .iter()
        .map(|&entry| KnnNeighbor {
            entry,
            distance: grid.center(entry as usize).distance(query),
        })
        .collect();
    ranked.sort_by(|a, b| a.distance.partial_cmp(&b.distance).expect("finite distances"));
    ranked.truncate(k);
    ranked
}

/// Window KNN: one `(2v+1)^3` scan per query. Queries outside the grid
/// extents anchor at the nearest edge cell.
pub fn voxel_knn(req: &KnnRequest) -> KnnResult {
    let mut stats = KnnStats::default();
    let per_query = req
        .queries
        .iter()
        .map(|&q| {
            let anchor = req.grid.spec().clamped_cell_of(q);
            let candidates = gather_window(req.grid, anchor, req.window, &mut stats);
            rank(req.grid, q, &candidates, req.k)
        })
        .collect();
    KnnResult { per_query, stats }
}

/// Conquer-fetch KNN: dedupe queries by containing cell (conquer), gather
/// each distinct cell's window once, then each query re-ranks that candidate
/// list by its own coordinates (fetch). Results equal [`voxel_knn`] exactly;
/// only the number of window gathers drops.
pub fn conquer_fetch_knn(req: &KnnRequest) -> KnnResult {
    let mut stats = KnnStats::default();
    let mut keyed: Vec<([u32; 3], u32)> = req
        .queries
        .iter()
        .enumerate()
        .map(|(i, &q)| (req.grid.spec().clamped_cell_of(q), i as u32))
        .collect();
    keyed.sort_unstable();

    let mut per_query: Vec<Vec<KnnNeighbor>> = alloc::vec![Vec::new(); req.queries.len()];
    let mut start = 0;
    while start < keyed.len() {
        let cell = keyed[start].0;
        let mut end = start + 1;
        while end < keyed.len() && keyed[end].0 == cell {
            end += 1;
        }
        let candidates = gather_window(req.grid, cell, req.window, &mut stats);
        for &(_, qi) in &keyed[start..end] {
            per_query[qi as usize] =
                rank(req.grid, req.queries[qi as usize], &candidates, req.k);
        }
        start = end;
    }
    KnnResult { per_query, stats }
}

/// Exhaustive KNN over all grid entries; the oracle. Entries are stored in
/// cell lexicographic order, so the same stable sort yields the same ties.
pub fn brute_knn(queries: &[Vec3], grid: &SparseVoxelGrid, k: usize) -> KnnResult {
    let mut stats = KnnStats::default();
    let all: Vec<u32> = (0..grid.len() as u32).collect();
    let per_query = queries
        .iter()
        .map(|&q| {
            stats.cells_visited += grid.len() as u64;
            rank(grid, q, &all, k)
        })
        .collect();
    KnnResult { per_query, stats }
}

/// Inverse-distance interpolation: `f = sum(w_j f_j) / sum(w_j)` with
/// `w_j = 1 / |p_j - p|`. A neighbor closer than [`COINCIDENT_EPS`] wins
/// outright (lowest index first), avoiding the singularity.
pub fn interpolate(query: Vec3, neighbors: &[(Vec3, &[f64])]) -> Result<Vec<f64>, CoreError> {
    let first = neighbors.first().ok_or(CoreError::NoNeighbors)?;
    let dim = first.1.len();
    if neighbors.iter().any(|(_, f)| f.len() != dim) {
        return Err(CoreError::ShapeMismatch {
            expected: dim,
            got: neighbors.iter().map(|(_, f)| f.len()).max().unwrap_or(0),
            what: "neighbor feature rows",
        });
    }
    for (p, f) in neighbors {
        if p.distance(query) < COINCIDENT_EPS {
            return Ok(f.to_vec());
        }
    }
    if neighbors.len() == 1 {
        // w f / w == f, exactly; skip the rounding of the weighted form
        return Ok(first.1.to_vec());
    }
    let mut acc = alloc::vec![0.0; dim];
    let mut total = 0.0;
    for (p, f) in neighbors {
        let w = 1.0 / p.distance(query);
        total += w;
        for (a, v) in acc.iter_mut().zip(*f) {
            *a += w * v;
        }
    }
    for a in acc.iter_mut() {
        *a /= total;
    }
    Ok(acc)
}

/// Interpolates a query feature from its KNN result rows against the grid.
pub fn interpolate_knn(
    grid: &SparseVoxelGrid,
    query: Vec3,
    neighbors: &[KnnNeighbor],
) -> Result<Vec<f64>, CoreError> {
    let pairs: Vec<(Vec3, &[f64])> = neighbors
        .iter()
        .map(|n| (grid.center(n.entry as usize), grid.feature(n.entry as usize)))
        .collect();
    interpolate(query, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::matrix::Matrix;
    use crate::rng::SeededRng;
    use crate::voxel::{voxelize, VoxelGridSpec, VoxelReducer};

    fn grid_from(points: &[[f64; 3]], feats: Option<(usize, Vec<f64>)>) -> SparseVoxelGrid {
        let spec = VoxelGridSpec::new(Vec3::ZERO, [1.0, 1.0, 1.0], [16, 16, 16]).unwrap();
        let pos: Vec<Vec3> = points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        let pc = match feats {
            Some((d, data)) => PointCloud::with_features(
                pos,
                Matrix::from_vec(points.len(), d, data).unwrap(),
            )
            .unwrap(),
            None => PointCloud::new(pos).unwrap(),
        };
        voxelize(&pc, &spec, VoxelReducer::Max).unwrap()
    }

    #[test]
    fn lone_occupied_cell_is_found() {
        let grid = grid_from(&[[3.5, 3.5, 3.5]], None);
        let q = [Vec3::new(3.2, 3.6, 3.4)];
        let req = KnnRequest::new(&q, &grid, 1, 2).unwrap();
        let res = voxel_knn(&req);
        assert_eq!(res.per_query[0].len(), 1);
        assert_eq!(res.per_query[0][0].entry, 0);
    }

    #[test]
    fn nearer_center_wins() {
        // centers at (3.5,3.5,3.5) and (5.5,3.5,3.5); query 0.1 from first
        let grid = grid_from(&[[3.5, 3.5, 3.5], [5.5, 3.5, 3.5]], None);
        let q = [Vec3::new(3.6, 3.5, 3.5)];
        let req = KnnRequest::new(&q, &grid, 1, 3).unwrap();
        let res = voxel_knn(&req);
        let picked = res.per_query[0][0].entry as usize;
        assert!(grid.center(picked).distance(q[0]) < 0.2);
    }

    #[test]
    fn covers_all_matches_brute_force() {
        let mut rng = SeededRng::new(7);
        let pts: Vec<[f64; 3]> = (0..60)
            .map(|_| {
                [
                    rng.uniform(5.0, 9.0),
                    rng.uniform(5.0, 9.0),
                    rng.uniform(5.0, 9.0),
                ]
            })
            .collect();
        let grid = grid_from(&pts, None);
        let queries: Vec<Vec3> = (0..20)
            .map(|_| {
                Vec3::new(
                    rng.uniform(5.0, 9.0),
                    rng.uniform(5.0, 9.0),
                    rng.uniform(5.0, 9.0),
                )
            })
            .collect();
        // window 8 covers the whole occupied block from any anchor
        let req = KnnRequest::new(&queries, &grid, 8, 8).unwrap();
        let fast = voxel_knn(&req);
        let brute = brute_knn(&queries, &grid, 8);
        assert_eq!(fast.per_query, brute.per_query);
    }

    #[test]
    fn conquer_fetch_equals_voxel_knn_with_one_scan_per_cell() {
        let grid = grid_from(&[[2.5, 2.5, 2.5], [3.5, 2.5, 2.5], [7.5, 7.5, 7.5]], None);
        // 128 queries all inside one cell
        let mut rng = SeededRng::new(33);
        let queries: Vec<Vec3> = (0..128)
            .map(|_| {
                Vec3::new(
                    rng.uniform(2.05, 2.95),
                    rng.uniform(2.05, 2.95),
                    rng.uniform(2.05, 2.95),
                )
            })
            .collect();
        let req = KnnRequest::new(&queries, &grid, 2, 2).unwrap();
        let plain = voxel_knn(&req);
        let fused = conquer_fetch_knn(&req);
        assert_eq!(plain.per_query, fused.per_query);
        assert_eq!(plain.stats.window_scans, 128);
        assert_eq!(fused.stats.window_scans, 1);
    }

    #[test]
    fn distinct_cells_do_same_work() {
        let grid = grid_from(&[[2.5, 2.5, 2.5], [9.5, 9.5, 9.5]], None);
        let queries = [Vec3::new(2.2, 2.2, 2.2), Vec3::new(9.8, 9.8, 9.8)];
        let req = KnnRequest::new(&queries, &grid, 1, 2).unwrap();
        let plain = voxel_knn(&req);
        let fused = conquer_fetch_knn(&req);
        assert_eq!(plain.per_query, fused.per_query);
        assert_eq!(plain.stats.window_scans, fused.stats.window_scans);
    }

    #[test]
    fn empty_window_gives_empty_result() {
        let grid = grid_from(&[[15.5, 15.5, 15.5]], None);
        let q = [Vec3::new(0.5, 0.5, 0.5)];
        let req = KnnRequest::new(&q, &grid, 4, 1).unwrap();
        let res = voxel_knn(&req);
        assert!(res.per_query[0].is_empty());
        let res = conquer_fetch_knn(&req);
        assert!(res.per_query[0].is_empty());
    }

    #[test]
    fn out_of_extent_query_anchors_at_edge() {
        let grid = grid_from(&[[0.5, 0.5, 0.5]], None);
        let q = [Vec3::new(-5.0, -5.0, -5.0)];
        let req = KnnRequest::new(&q, &grid, 1, 1).unwrap();
        let res = voxel_knn(&req);
        assert_eq!(res.per_query[0].len(), 1);
    }

    #[test]
    fn fuzzed_conquer_fetch_is_bit_exact() {
        let mut rng = SeededRng::new(101);
        for _ in 0..200 {
            let n = 1 + rng.next_below(80) as usize;
            let pts: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    [
                        rng.uniform(0.0, 16.0),
                        rng.uniform(0.0, 16.0),
                        rng.uniform(0.0, 16.0),
                    ]
                })
                .collect();
            let grid = grid_from(&pts, None);
            let mq = 1 + rng.next_below(60) as usize;
            let queries: Vec<Vec3> = (0..mq)
                .map(|_| {
                    Vec3::new(
                        rng.uniform(-2.0, 18.0),
                        rng.uniform(-2.0, 18.0),
                        rng.uniform(-2.0, 18.0),
                    )
                })
                .collect();
            let k = 1 + rng.next_below(9) as usize;
            let w = 1 + rng.next_below(3) as usize;
            let req = KnnRequest::new(&queries, &grid, k, w).unwrap();
            assert_eq!(voxel_knn(&req).per_query, conquer_fetch_knn(&req).per_query);
        }
    }

    #[test]
    fn interpolation_single_neighbor_is_identity() {
        let f = [3.0, -1.0];
        let out = interpolate(Vec3::ZERO, &[(Vec3::new(5.0, 0.0, 0.0), &f)]).unwrap();
        assert_eq!(out, alloc::vec![3.0, -1.0]);
    }

    #[test]
    fn interpolation_hand_case() {
        // distances 1 and 2, scalar features 3 and 6:
        // (1*3 + 0.5*6) / 1.5 = 4
        let f1 = [3.0];
        let f2 = [6.0];
        let out = interpolate(
            Vec3::ZERO,
            &[
                (Vec3::new(1.0, 0.0, 0.0), &f1[..]),
                (Vec3::new(2.0, 0.0, 0.0), &f2[..]),
            ],
        )
        .unwrap();
        assert!((out[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_coincident_neighbor_short_circuits() {
        let f1 = [9.0];
        let f2 = [1.0];
        let out = interpolate(
            Vec3::new(2.0, 0.0, 0.0),
            &[
                (Vec3::new(2.0, 0.0, 5e-9), &f1[..]),
                (Vec3::new(3.0, 0.0, 0.0), &f2[..]),
            ],
        )
        .unwrap();
        assert_eq!(out, alloc::vec![9.0]);
    }

    #[test]
    fn interpolation_requires_neighbors() {
        assert!(matches!(
            interpolate(Vec3::ZERO, &[]),
            Err(CoreError::NoNeighbors)
        ));
    }

    #[test]
    fn interpolation_stays_in_convex_hull() {
        let mut rng = SeededRng::new(14);
        for _ in 0..2_000 {
            let k = 1 + rng.next_below(8) as usize;
            let feats: Vec<[f64; 2]> = (0..k)
                .map(|_| [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)])
                .collect();
            let neighbors: Vec<(Vec3, &[f64])> = feats
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    (
                        Vec3::new(
                            rng.uniform(-3.0, 3.0),
                            rng.uniform(-3.0, 3.0),
                            i as f64 * 0.1 + 0.1,
                        ),
                        &f[..],
                    )
                })
                .collect();
            let out = interpolate(Vec3::ZERO, &neighbors).unwrap();
            for c in 0..2 {
                let lo = feats.iter().map(|f| f[c]).fold(f64::INFINITY, f64::min);
                let hi = feats.iter().map(|f| f[c]).fold(f64::NEG_INFINITY, f64::max);
                assert!(out[c] >= lo - 1e-9 && out[c] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn interpolation_weights_normalize() {
        // reconstructing the weights from distances must give a convex combination
        let mut rng = SeededRng::new(15);
        for _ in 0..1_000 {
            let k = 2 + rng.next_below(6) as usize;
            let centers: Vec<Vec3> = (0..k)
                .map(|_| {
                    Vec3::new(
                        rng.uniform(0.5, 4.0),
                        rng.uniform(-2.0, 2.0),
                        rng.uniform(-2.0, 2.0),
                    )
                })
                .collect();
            let mut weights: Vec<f64> =
                centers.iter().map(|c| 1.0 / c.distance(Vec3::ZERO)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= total;
            }
            assert!(weights.iter().all(|w| *w > 0.0));
            assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolate_knn_reads_grid_rows() {
        let grid = grid_from(
            &[[3.5, 3.5, 3.5], [5.5, 3.5, 3.5]],
            Some((1, alloc::vec![3.0, 6.0])),
        );
        let q = Vec3::new(4.5, 3.5, 3.5); // distance 1 to each center
        let req_q = [q];
        let res = voxel_knn(&KnnRequest::new(&req_q, &grid, 2, 3).unwrap());
        let f = interpolate_knn(&grid, q, &res.per_query[0]).unwrap();
        assert!((f[0] - 4.5).abs() < 1e-12);
    }
}
