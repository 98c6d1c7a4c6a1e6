//! End-to-end pipeline: voxelize, embed, collapse, initialize queries,
//! gather voxel/point tokens per reference, fuse through the attention
//! stack, and score the oracle-labeled losses.
//!
//! There are no trained heads here; the backbone is replaced by a seeded
//! linear embedding of the 4-dim voxel surrogate features and the loss
//! section evaluates two fixed prediction sets instead of learned ones:
//! `perfect` (predictions equal targets, a plumbing sanity check that must
//! score ~0) and `baseline` (uninformed predictions: probability 0.5, zero
//! offsets, unit boxes), which gives a nonzero reference magnitude.

use std::time::Instant;

use anyhow::{Context, Result};

use pointvoxel_core::attn::{BlockShape, TransformerStack};
use pointvoxel_core::augment::{apply_augment, inverse_augment, AugmentationRecord};
use pointvoxel_core::loss::{
    centerness_target, cls_loss, offset_loss, reg_loss, seg_loss, ClsBatch, OffsetBatch, SegBatch,
};
use pointvoxel_core::matrix::row_affine;
use pointvoxel_core::query::{foreground_scores, init_queries, oracle_offsets, QuerySet};
use pointvoxel_core::range_image::{RangeImageSpec, VirtualRangeImage};
use pointvoxel_core::tokens::{gen_point_tokens, gen_voxel_tokens, PointTokenParams, TokenSet};
use pointvoxel_core::voxel::{
    collapse_height, densify, voxelize, SparseVoxelGrid, VoxelGridSpec, VoxelReducer,
};
use pointvoxel_core::{BoundingBox3D, Matrix, PointCloud, RigidTransform, SeededRng, Vec3};

use crate::config::PipelineConfig;
use crate::scene::random_augmentations;

// independent child-stream ids off the run seed
const STREAM_EMBED: u64 = 0x01;
const STREAM_ATTN: u64 = 0x02;
const STREAM_AUGMENT: u64 = 0x03;
const STREAM_VOXEL_TOKENS: u64 = 0x1000_0000;
const STREAM_BALL: u64 = 0x2000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossValues {
    pub seg: f64,
    pub offset: f64,
    pub cls: f64,
    pub reg_center: f64,
    pub reg_size: f64,
    pub reg_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub seed: u64,
    pub points: usize,
    pub voxels: usize,
    pub bev_cells: usize,
    pub foreground_bev_cells: usize,
    pub queries: usize,
    pub foreground_queries: usize,
    pub voxel_tokens: usize,
    pub point_tokens: usize,
    pub masked_point_tokens: usize,
    pub losses_perfect: LossValues,
    pub losses_baseline: LossValues,
    /// Wall time; the one field excluded from determinism comparisons.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Fused per-reference features, `references x model_dim`.
    pub fused: Matrix,
    pub references: Vec<Vec3>,
    pub diagnostics: Diagnostics,
}

fn fine_grid_spec(cfg: &PipelineConfig) -> Result<VoxelGridSpec> {
    let half = cfg.extent * 0.5;
    let nx = (cfg.extent / cfg.voxel_size[0]).ceil() as usize;
    let ny = (cfg.extent / cfg.voxel_size[1]).ceil() as usize;
    let nz = ((cfg.z_max - cfg.z_min) / cfg.voxel_size[2]).ceil() as usize;
    Ok(VoxelGridSpec::new(
        Vec3::new(-half, -half, cfg.z_min),
        cfg.voxel_size,
        [nx.max(1), ny.max(1), nz.max(1)],
    )?)
}

fn coarse_grid_spec(cfg: &PipelineConfig) -> Result<VoxelGridSpec> {
    let half = cfg.extent * 0.5;
    let s = cfg.bev_stride as f64;
    let nx = (cfg.extent / (cfg.voxel_size[0] * s)).ceil() as usize;
    let ny = (cfg.extent / (cfg.voxel_size[1] * s)).ceil() as usize;
    let nz = ((cfg.z_max - cfg.z_min) / cfg.voxel_size[2]).ceil() as usize;
    Ok(VoxelGridSpec::new(
        Vec3::new(-half, -half, cfg.z_min),
        [cfg.voxel_size[0] * s, cfg.voxel_size[1] * s, cfg.voxel_size[2]],
        [nx.max(1), ny.max(1), nz.max(1)],
    )?)
}

/// Seeded linear embedding of the 4-dim voxel surrogate features into the
/// model width: the stand-in for the excluded convolutional backbone.
fn embed_grid(grid: &SparseVoxelGrid, dim: usize, rng: &SeededRng) -> Result<SparseVoxelGrid> {
    let mut stream = rng.derive(STREAM_EMBED);
    let bound = 1.0 / (grid.feature_dim() as f64).sqrt();
    let w = Matrix::seeded_uniform(grid.feature_dim(), dim, bound, &mut stream);
    let b: Vec<f64> = (0..dim).map(|_| stream.uniform(-bound, bound)).collect();
    let mut rows = Matrix::empty(dim);
    for i in 0..grid.len() {
        rows.push_row(&row_affine(grid.feature(i), &w, &b)?)?;
    }
    Ok(grid.with_features(rows)?)
}

pub fn run_pipeline(
    pc: &PointCloud,
    boxes: &[BoundingBox3D],
    record: &AugmentationRecord,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let rng = SeededRng::new(cfg.seed);

    // optional extra augmentation, recorded so queries can be mapped back
    let mut record = record.clone();
    let mut working = pc.clone();
    let mut boxes: Vec<BoundingBox3D> = boxes.to_vec();
    if cfg.augment_steps > 0 {
        let extra = random_augmentations(cfg.augment_steps, rng.derive(STREAM_AUGMENT).seed());
        working = apply_augment(&working, &extra)?;
        for b in boxes.iter_mut() {
            *b = extra.apply_box(b);
        }
        for step in extra.steps() {
            record.push(*step)?;
        }
    }
    // raw-sensor coordinates for the range image
    let raw = inverse_augment(&working, &record)?;

    let fine_spec = fine_grid_spec(cfg)?;
    let grid = voxelize(&working, &fine_spec, VoxelReducer::Max)
        .context("voxelizing the scene (is the cloud empty or out of extent?)")?;
    let grid = embed_grid(&grid, cfg.model_dim, &rng)?;
    let bev_fine = collapse_height(&grid);

    // dense BEV feature map from a coarser lattice (memory stays bounded)
    let coarse = voxelize(&working, &coarse_grid_spec(cfg)?, VoxelReducer::Max)
        .context("voxelizing the BEV lattice")?;
    let coarse = embed_grid(&coarse, cfg.model_dim, &rng)?;
    let bev_map = densify(&collapse_height(&coarse));

    let m = cfg.references.min(bev_fine.len());
    let queries: QuerySet = init_queries(&working, &boxes, &bev_map, &fine_spec, m)
        .context("query initialization")?;

    let img = VirtualRangeImage::build(
        &raw,
        &RigidTransform::translation(Vec3::new(0.0, 0.0, cfg.sensor_height)),
        RangeImageSpec::new(
            cfg.image_rows,
            cfg.image_cols,
            RangeImageSpec::spinning_64x2048().incl_min,
            RangeImageSpec::spinning_64x2048().incl_max,
        )?,
    );

    let token_params = PointTokenParams {
        radius: cfg.radius_point,
        count: cfg.tokens_per_type,
        kernel: cfg.kernel,
        knn_k: cfg.interp_k,
        knn_window: cfg.knn_window,
    };
    let shape = BlockShape {
        dim: cfg.model_dim,
        heads: cfg.heads,
        ffn_dim: cfg.ffn_dim,
        pos_hidden: cfg.pos_hidden,
    };
    let stack = TransformerStack::seeded(&shape, cfg.blocks, &mut rng.derive(STREAM_ATTN))?;

    let mut fused = Matrix::zeros(m, cfg.model_dim);
    let mut voxel_tokens = 0usize;
    let mut point_tokens = 0usize;
    let mut masked_point_tokens = 0usize;
    for i in 0..m {
        let reference = queries.points[i];
        let mut vox_rng = rng.derive(STREAM_VOXEL_TOKENS + i as u64);
        let vox = gen_voxel_tokens(
            reference,
            &grid,
            cfg.radius_voxel,
            cfg.tokens_per_type,
            &mut vox_rng,
        );
        let ball_seed = rng.derive(STREAM_BALL + i as u64).seed();
        let pts = gen_point_tokens(
            record.invert_point(reference),
            &img,
            working.positions(),
            &grid,
            &token_params,
            cfg.ball_mode.selection(ball_seed),
        )?;
        voxel_tokens += vox.len();
        point_tokens += pts.len();
        masked_point_tokens += pts.len() - pts.valid_count();
        let tokens: TokenSet = vox.concat(pts)?;

        let mut fq = Matrix::empty(cfg.model_dim);
        fq.push_row(queries.features.row(i))?;
        let out = stack.forward(&fq, &[reference], &tokens, cfg.pos_encoding)?;
        fused.row_mut(i).copy_from_slice(out.row(0));
    }

    let (losses_perfect, losses_baseline, fg_bev, fg_queries) =
        evaluate_losses(&bev_fine_centers(&bev_fine), &queries, &boxes)?;

    let diagnostics = Diagnostics {
        seed: cfg.seed,
        points: pc.len(),
        voxels: grid.len(),
        bev_cells: bev_fine.len(),
        foreground_bev_cells: fg_bev,
        queries: m,
        foreground_queries: fg_queries,
        voxel_tokens,
        point_tokens,
        masked_point_tokens,
        losses_perfect,
        losses_baseline,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    Ok(PipelineOutput {
        fused,
        references: queries.points.clone(),
        diagnostics,
    })
}

fn bev_fine_centers(bev: &pointvoxel_core::voxel::SparseBevGrid) -> Vec<[f64; 2]> {
    (0..bev.len()).map(|i| bev.center(i)).collect()
}

/// Scores the loss suite for the perfect and baseline prediction sets.
/// Zero-foreground scenes contribute zero to the offset/regression terms.
fn evaluate_losses(
    bev_centers: &[[f64; 2]],
    queries: &QuerySet,
    boxes: &[BoundingBox3D],
) -> Result<(LossValues, LossValues, usize, usize)> {
    let scores = foreground_scores(bev_centers, boxes);
    let labels: Vec<bool> = scores.iter().map(|&s| s == 1.0).collect();
    let fg_bev = labels.iter().filter(|l| **l).count();

    let seg_perfect = seg_loss(&SegBatch {
        probs: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
        labels: labels.clone(),
    })?;
    let seg_baseline = seg_loss(&SegBatch {
        probs: vec![0.5; labels.len()],
        labels: labels.clone(),
    })?;

    // offsets are supervised on the foreground sampled voxels only
    let selected_centers: Vec<[f64; 2]> = queries
        .provenance
        .iter()
        .map(|&i| bev_centers[i])
        .collect();
    let offset_targets = oracle_offsets(&selected_centers, boxes);
    let selected_scores = foreground_scores(&selected_centers, boxes);
    let fg_rows: Vec<usize> = (0..selected_centers.len())
        .filter(|&i| selected_scores[i] == 1.0)
        .collect();
    let (offset_perfect, offset_baseline) = if fg_rows.is_empty() {
        (0.0, 0.0)
    } else {
        let target: Vec<Vec3> = fg_rows.iter().map(|&i| offset_targets[i]).collect();
        let perfect = offset_loss(
            &OffsetBatch {
                pred: target.clone(),
                target: target.clone(),
            },
            1.0,
        )?;
        let baseline = offset_loss(
            &OffsetBatch {
                pred: vec![Vec3::ZERO; target.len()],
                target,
            },
            1.0,
        )?;
        (perfect, baseline)
    };

    // per-reference centerness labels; foreground means inside some box
    let mut cls_labels = Vec::with_capacity(queries.len());
    let mut reg_pairs_perfect = Vec::new();
    let mut reg_pairs_baseline = Vec::new();
    let mut fg_queries = 0usize;
    for &p in &queries.points {
        let mut best: Option<(f64, &BoundingBox3D)> = None;
        for b in boxes {
            let c = centerness_target(p, b);
            if c > 0.0 && best.map_or(true, |(bc, _)| c > bc) {
                best = Some((c, b));
            }
        }
        match best {
            Some((c, b)) => {
                fg_queries += 1;
                cls_labels.push(c);
                reg_pairs_perfect.push((*b, *b));
                reg_pairs_baseline
                    .push((BoundingBox3D::new(p, [1.0, 1.0, 1.0], 0.0)?, *b));
            }
            None => cls_labels.push(0.0),
        }
    }
    let cls_perfect = cls_loss(&ClsBatch {
        probs: cls_labels.clone(),
        labels: cls_labels.clone(),
    })?;
    let cls_baseline = cls_loss(&ClsBatch {
        probs: vec![0.5; cls_labels.len()],
        labels: cls_labels.clone(),
    })?;

    let (reg_perfect, reg_baseline) = if reg_pairs_perfect.is_empty() {
        (Default::default(), Default::default())
    } else {
        (
            reg_loss(&reg_pairs_perfect, 1.0)?,
            reg_loss(&reg_pairs_baseline, 1.0)?,
        )
    };

    let perfect = LossValues {
        seg: seg_perfect,
        offset: offset_perfect,
        cls: cls_perfect,
        reg_center: reg_perfect.center,
        reg_size: reg_perfect.size,
        reg_angle: reg_perfect.angle,
    };
    let baseline = LossValues {
        seg: seg_baseline,
        offset: offset_baseline,
        cls: cls_baseline,
        reg_center: reg_baseline.center,
        reg_size: reg_baseline.size,
        reg_angle: reg_baseline.angle,
    };
    Ok((perfect, baseline, fg_bev, fg_queries))
}

/// FNV-1a over the fused matrix bits: a stable fingerprint for determinism
/// checks across processes.
pub fn fused_fingerprint(fused: &Matrix) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in fused.data() {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Flattens the diagnostics into `(key, value)` report rows. Timing is
/// reported but callers comparing runs should skip `wall_ms`.
pub fn report_rows(out: &PipelineOutput) -> Vec<(String, String)> {
    let d = &out.diagnostics;
    let mut rows: Vec<(String, String)> = vec![
        ("seed".into(), d.seed.to_string()),
        ("points".into(), d.points.to_string()),
        ("voxels".into(), d.voxels.to_string()),
        ("bev_cells".into(), d.bev_cells.to_string()),
        (
            "foreground_bev_cells".into(),
            d.foreground_bev_cells.to_string(),
        ),
        ("queries".into(), d.queries.to_string()),
        ("foreground_queries".into(), d.foreground_queries.to_string()),
        ("voxel_tokens".into(), d.voxel_tokens.to_string()),
        ("point_tokens".into(), d.point_tokens.to_string()),
        (
            "masked_point_tokens".into(),
            d.masked_point_tokens.to_string(),
        ),
        ("fused_fingerprint".into(), format!("{:016x}", fused_fingerprint(&out.fused))),
        ("wall_ms".into(), format!("{:.3}", d.wall_ms)),
    ];
    for (tag, l) in [("perfect", d.losses_perfect), ("baseline", d.losses_baseline)] {
        rows.push((format!("loss_{tag}_seg"), format!("{:.12e}", l.seg)));
        rows.push((format!("loss_{tag}_offset"), format!("{:.12e}", l.offset)));
        rows.push((format!("loss_{tag}_cls"), format!("{:.12e}", l.cls)));
        rows.push((
            format!("loss_{tag}_reg_center"),
            format!("{:.12e}", l.reg_center),
        ));
        rows.push((
            format!("loss_{tag}_reg_size"),
            format!("{:.12e}", l.reg_size),
        ));
        rows.push((
            format!("loss_{tag}_reg_angle"),
            format!("{:.12e}", l.reg_angle),
        ));
    }
    rows
}
