//! Latency and work benchmarks: range-view ball query against the brute
//! oracle across point-cloud sizes, and the KNN variants with their window
//! scan counters.
//!
//! Scenes here keep areal density constant — the disc grows with the point
//! count — and queries sit on a fixed ring near the sensor, so the pixel
//! window around a query sees the same local geometry at every size. That
//! isolates the complexity claim: per-query candidate work stays flat while
//! brute-force work grows with n.

use std::time::Instant;

use anyhow::Result;

use pointvoxel_core::geom::cartesian_to_spherical;
use pointvoxel_core::knn::{brute_knn, conquer_fetch_knn, voxel_knn, KnnRequest};
use pointvoxel_core::range_image::{
    ball_query, brute_force_ball_query, BallQueryRequest, RangeImageSpec, SelectionMode,
    VirtualRangeImage,
};
use pointvoxel_core::voxel::{voxelize, VoxelGridSpec, VoxelReducer};
use pointvoxel_core::{PointCloud, RigidTransform, SeededRng, Vec3};

/// Ground points per square meter; fixed so the scene area scales with n.
const BENCH_DENSITY: f64 = 20.0;
/// Query ring radius (meters). Close enough to the sensor that a 16-pixel
/// window's ground footprint fits inside the smallest benchmark disc.
const QUERY_RING: f64 = 6.0;
const SENSOR_HEIGHT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BallBenchRow {
    pub n: usize,
    pub queries: usize,
    pub kernel: usize,
    pub radius: f64,
    pub k: usize,
    pub seed: u64,
    pub brute_ms: f64,
    pub rv_build_ms: f64,
    pub rv_query_ms: f64,
    /// Operator-level speedup: brute query time over range-view query time.
    /// The image build is a per-scene index shared by every query batch, so
    /// it is amortized out of this ratio (and reported on its own).
    pub speedup: f64,
    /// Conservative speedup charging the full image build to this one batch.
    pub speedup_with_build: f64,
    /// Mean candidates inspected per query by the range-view path.
    pub rv_candidates_per_query: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallBenchReport {
    pub rows: Vec<BallBenchRow>,
}

impl BallBenchReport {
    pub const CSV_HEADER: &'static str = "n,queries,kernel,radius,k,seed,brute_ms,rv_build_ms,rv_query_ms,speedup,speedup_with_build,rv_candidates_per_query";

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.queries.to_string(),
                    r.kernel.to_string(),
                    r.radius.to_string(),
                    r.k.to_string(),
                    r.seed.to_string(),
                    format!("{:.3}", r.brute_ms),
                    format!("{:.3}", r.rv_build_ms),
                    format!("{:.3}", r.rv_query_ms),
                    format!("{:.2}", r.speedup),
                    format!("{:.2}", r.speedup_with_build),
                    format!("{:.1}", r.rv_candidates_per_query),
                ]
            })
            .collect()
    }
}

/// Constant-density ground disc with mild height jitter, sized for `n`.
pub fn gen_bench_cloud(n: usize, seed: u64) -> PointCloud {
    let radius = (n as f64 / (core::f64::consts::PI * BENCH_DENSITY)).sqrt();
    let mut rng = SeededRng::new(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let r = radius * rng.next_f64().sqrt();
        let theta = rng.uniform(-core::f64::consts::PI, core::f64::consts::PI);
        let z = rng.next_normal() * 0.15;
        points.push(Vec3::new(r * theta.cos(), r * theta.sin(), z));
    }
    PointCloud::new(points).expect("finite by construction")
}

/// Evenly spaced query points on the fixed ring, slightly above ground.
pub fn bench_queries(count: usize) -> Vec<Vec3> {
    (0..count)
        .map(|i| {
            let a = (i as f64 / count as f64) * 2.0 * core::f64::consts::PI
                - core::f64::consts::PI;
            Vec3::new(QUERY_RING * a.cos(), QUERY_RING * a.sin(), 0.5)
        })
        .collect()
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    samples[samples.len() / 2]
}

pub struct BallBenchParams {
    pub sizes: Vec<usize>,
    pub queries: usize,
    pub radius: f64,
    pub k: usize,
    pub kernel: usize,
    pub seed: u64,
    pub reps: usize,
}

impl Default for BallBenchParams {
    fn default() -> Self {
        // reference parameters: 32 neighbors within 0.8 m through a
        // 16-pixel kernel
        BallBenchParams {
            sizes: vec![25_000, 50_000, 100_000, 200_000],
            queries: 2048,
            radius: 0.8,
            k: 32,
            kernel: 16,
            seed: 0,
            reps: 5,
        }
    }
}

pub fn bench_ball_query(params: &BallBenchParams) -> Result<BallBenchReport> {
    let sensor = RigidTransform::translation(Vec3::new(0.0, 0.0, SENSOR_HEIGHT));
    let queries = bench_queries(params.queries);
    let spherical: Vec<_> = queries
        .iter()
        .map(|&q| cartesian_to_spherical(sensor.inverse().apply(q)))
        .collect();
    let mut rows = Vec::new();

    for &n in &params.sizes {
        let cloud = gen_bench_cloud(n, params.seed.wrapping_add(n as u64));
        let mode = SelectionMode::Random { seed: params.seed };

        // timing runs are serialized per method
        let mut brute_samples = Vec::with_capacity(params.reps);
        for _ in 0..params.reps {
            let t = Instant::now();
            let out = brute_force_ball_query(&cloud, &queries, params.radius, params.k, mode);
            brute_samples.push(t.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(out);
        }

        let mut build_samples = Vec::with_capacity(params.reps);
        let mut query_samples = Vec::with_capacity(params.reps);
        let mut inspected = 0f64;
        for _ in 0..params.reps {
            let t = Instant::now();
            let img =
                VirtualRangeImage::build(&cloud, &sensor, RangeImageSpec::spinning_64x2048());
            build_samples.push(t.elapsed().as_secs_f64() * 1e3);
            let req = BallQueryRequest::new(
                spherical.clone(),
                params.radius,
                params.k,
                params.kernel,
                mode,
            )?;
            let t = Instant::now();
            let out = ball_query(&img, &req);
            query_samples.push(t.elapsed().as_secs_f64() * 1e3);
            inspected = out.stats.candidates_inspected as f64 / params.queries as f64;
            std::hint::black_box(&out);
        }

        let brute_ms = median(&mut brute_samples);
        let rv_build_ms = median(&mut build_samples);
        let rv_query_ms = median(&mut query_samples);
        rows.push(BallBenchRow {
            n,
            queries: params.queries,
            kernel: params.kernel,
            radius: params.radius,
            k: params.k,
            seed: params.seed,
            brute_ms,
            rv_build_ms,
            rv_query_ms,
            speedup: brute_ms / rv_query_ms,
            speedup_with_build: brute_ms / (rv_build_ms + rv_query_ms),
            rv_candidates_per_query: inspected,
        });
    }
    Ok(BallBenchReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMode {
    Brute,
    Voxel,
    Conquer,
}

impl KnnMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(KnnMode::Brute),
            "voxel" => Ok(KnnMode::Voxel),
            "conquer" => Ok(KnnMode::Conquer),
            other => anyhow::bail!("mode must be brute|voxel|conquer, got {other:?}"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KnnMode::Brute => "brute",
            KnnMode::Voxel => "voxel",
            KnnMode::Conquer => "conquer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnBenchRow {
    pub n: usize,
    pub voxels: usize,
    pub queries: usize,
    pub mode: &'static str,
    pub k: usize,
    pub window: usize,
    pub seed: u64,
    pub time_ms: f64,
    pub window_scans: u64,
    pub cells_visited: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnBenchReport {
    pub rows: Vec<KnnBenchRow>,
}

impl KnnBenchReport {
    pub const CSV_HEADER: &'static str =
        "n,voxels,queries,mode,k,window,seed,time_ms,window_scans,cells_visited";

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.voxels.to_string(),
                    r.queries.to_string(),
                    r.mode.to_string(),
                    r.k.to_string(),
                    r.window.to_string(),
                    r.seed.to_string(),
                    format!("{:.3}", r.time_ms),
                    r.window_scans.to_string(),
                    r.cells_visited.to_string(),
                ]
            })
            .collect()
    }
}

pub struct KnnBenchParams {
    pub sizes: Vec<usize>,
    pub queries: usize,
    pub k: usize,
    pub window: usize,
    pub mode: KnnMode,
    pub seed: u64,
    pub reps: usize,
}

pub fn bench_knn(params: &KnnBenchParams) -> Result<KnnBenchReport> {
    let queries = bench_queries(params.queries);
    let mut rows = Vec::new();
    for &n in &params.sizes {
        let cloud = gen_bench_cloud(n, params.seed.wrapping_add(n as u64));
        let radius = (n as f64 / (core::f64::consts::PI * BENCH_DENSITY)).sqrt() + 1.0;
        let spec = VoxelGridSpec::new(
            Vec3::new(-radius, -radius, -2.0),
            [0.2, 0.2, 0.2],
            [
                (2.0 * radius / 0.2).ceil() as usize,
                (2.0 * radius / 0.2).ceil() as usize,
                20,
            ],
        )?;
        let grid = voxelize(&cloud, &spec, VoxelReducer::Max)?;
        let req = KnnRequest::new(&queries, &grid, params.k, params.window)?;

        let mut samples = Vec::with_capacity(params.reps);
        let mut window_scans = 0;
        let mut cells_visited = 0;
        for _ in 0..params.reps {
            let t = Instant::now();
            let out = match params.mode {
                KnnMode::Brute => brute_knn(&queries, &grid, params.k),
                KnnMode::Voxel => voxel_knn(&req),
                KnnMode::Conquer => conquer_fetch_knn(&req),
            };
            samples.push(t.elapsed().as_secs_f64() * 1e3);
            window_scans = out.stats.window_scans;
            cells_visited = out.stats.cells_visited;
            std::hint::black_box(&out);
        }
        rows.push(KnnBenchRow {
            n,
            voxels: grid.len(),
            queries: params.queries,
            mode: params.mode.name(),
            k: params.k,
            window: params.window,
            seed: params.seed,
            time_ms: median(&mut samples),
            window_scans,
            cells_visited,
        });
    }
    Ok(KnnBenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_cloud_is_seeded_and_sized() {
        let a = gen_bench_cloud(2_000, 3);
        let b = gen_bench_cloud(2_000, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2_000);
        assert_ne!(a, gen_bench_cloud(2_000, 4));
    }

    #[test]
    fn small_ball_bench_has_sane_fields() {
        let report = bench_ball_query(&BallBenchParams {
            sizes: vec![2_000, 4_000],
            queries: 64,
            reps: 1,
            ..BallBenchParams::default()
        })
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        for r in &report.rows {
            assert!(r.brute_ms > 0.0 && r.rv_build_ms > 0.0 && r.rv_query_ms > 0.0);
            assert!(r.speedup > 0.0);
            assert!((r.speedup - r.brute_ms / r.rv_query_ms).abs() < 1e-9);
            assert!(
                (r.speedup_with_build - r.brute_ms / (r.rv_build_ms + r.rv_query_ms)).abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn knn_bench_counts_scans_per_mode() {
        // 512 queries on the ring pack several per 0.2 m cell, so the
        // conquer pass must dedup them
        let params = KnnBenchParams {
            sizes: vec![2_000],
            queries: 512,
            k: 4,
            window: 2,
            mode: KnnMode::Voxel,
            seed: 1,
            reps: 1,
        };
        let voxel = bench_knn(&params).unwrap();
        assert_eq!(voxel.rows[0].window_scans, 512);
        let conquer = bench_knn(&KnnBenchParams {
            mode: KnnMode::Conquer,
            ..params
        })
        .unwrap();
        assert!(conquer.rows[0].window_scans < 512);
        assert!(conquer.rows[0].window_scans >= 1);
    }
}
