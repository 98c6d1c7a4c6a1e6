//! Flat `key=value` config files for the pipeline and scene generator.
//! Lines starting with `#` are comments; unknown keys are rejected so typos
//! fail loudly instead of silently keeping a default.

use anyhow::{bail, Context, Result};
use pointvoxel_core::attn::PosEncodingMode;
use pointvoxel_core::range_image::SelectionMode;

/// Pipeline knobs. Defaults are the reference operating point: 512
/// reference queries, 128 neighbors per token type, radii 8.0 / 3.2 m,
/// model width 128 with 4 heads and a 512-wide FFN, 8-neighbor
/// interpolation, ball-query kernel 16.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Reference points / content queries (m).
    pub references: usize,
    /// Neighbors sampled per token type per reference (l).
    pub tokens_per_type: usize,
    /// Voxel-token sampling radius (meters).
    pub radius_voxel: f64,
    /// Point-token ball query radius (meters).
    pub radius_point: f64,
    pub model_dim: usize,
    pub ffn_dim: usize,
    pub heads: usize,
    pub blocks: usize,
    pub pos_hidden: usize,
    /// Voxel neighbors per point for feature interpolation (k).
    pub interp_k: usize,
    /// Voxel-KNN window half-width in cells (v).
    pub knn_window: usize,
    /// Range-image ball-query window side in pixels (s).
    pub kernel: usize,
    /// random | sequential
    pub ball_mode: BallMode,
    /// none | contextual | bias | absolute
    pub pos_encoding: PosEncodingMode,
    pub voxel_size: [f64; 3],
    /// Horizontal scene extent (meters); the grid spans [-extent/2, extent/2].
    pub extent: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// BEV raster coarsening factor relative to the voxel grid.
    pub bev_stride: usize,
    /// Sensor origin height above the scene frame (meters).
    pub sensor_height: f64,
    /// Range image rows/cols.
    pub image_rows: usize,
    pub image_cols: usize,
    /// Extra seeded augmentation steps applied before the pipeline runs.
    pub augment_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    Random,
    Sequential,
}

impl BallMode {
    pub fn selection(&self, seed: u64) -> SelectionMode {
        match self {
            BallMode::Random => SelectionMode::Random { seed },
            BallMode::Sequential => SelectionMode::Sequential,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            references: 512,
            tokens_per_type: 128,
            radius_voxel: 8.0,
            radius_point: 3.2,
            model_dim: 128,
            ffn_dim: 512,
            heads: 4,
            blocks: 1,
            pos_hidden: 16,
            interp_k: 8,
            knn_window: 2,
            kernel: 16,
            ball_mode: BallMode::Random,
            pos_encoding: PosEncodingMode::ContextualRelative,
            voxel_size: [0.1, 0.1, 0.15],
            extent: 80.0,
            z_min: -2.0,
            z_max: 4.0,
            bev_stride: 8,
            sensor_height: 2.0,
            image_rows: 64,
            image_cols: 2048,
            augment_steps: 0,
        }
    }
}

fn parse_kv(text: &str) -> Result<Vec<(&str, &str)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key=value", lineno + 1))?;
        pairs.push((key.trim(), value.trim()));
    }
    Ok(pairs)
}

impl PipelineConfig {
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (key, value) in parse_kv(text)? {
            let ctx = || format!("key {key}");
            match key {
                "seed" => cfg.seed = value.parse().with_context(ctx)?,
                "references" => cfg.references = value.parse().with_context(ctx)?,
                "tokens_per_type" => cfg.tokens_per_type = value.parse().with_context(ctx)?,
                "radius_voxel" => cfg.radius_voxel = value.parse().with_context(ctx)?,
                "radius_point" => cfg.radius_point = value.parse().with_context(ctx)?,
                "model_dim" => cfg.model_dim = value.parse().with_context(ctx)?,
                "ffn_dim" => cfg.ffn_dim = value.parse().with_context(ctx)?,
                "heads" => cfg.heads = value.parse().with_context(ctx)?,
                "blocks" => cfg.blocks = value.parse().with_context(ctx)?,
                "pos_hidden" => cfg.pos_hidden = value.parse().with_context(ctx)?,
                "interp_k" => cfg.interp_k = value.parse().with_context(ctx)?,
                "knn_window" => cfg.knn_window = value.parse().with_context(ctx)?,
                "kernel" => cfg.kernel = value.parse().with_context(ctx)?,
                "ball_mode" => {
                    cfg.ball_mode = match value {
                        "random" => BallMode::Random,
                        "sequential" => BallMode::Sequential,
                        other => bail!("ball_mode must be random|sequential, got {other:?}"),
                    }
                }
                "pos_encoding" => {
                    cfg.pos_encoding = match value {
                        "none" => PosEncodingMode::None,
                        "contextual" => PosEncodingMode::ContextualRelative,
                        "bias" => PosEncodingMode::BiasRelative,
                        "absolute" => PosEncodingMode::Absolute,
                        other => {
                            bail!("pos_encoding must be none|contextual|bias|absolute, got {other:?}")
                        }
                    }
                }
                "voxel_size_x" => cfg.voxel_size[0] = value.parse().with_context(ctx)?,
                "voxel_size_y" => cfg.voxel_size[1] = value.parse().with_context(ctx)?,
                "voxel_size_z" => cfg.voxel_size[2] = value.parse().with_context(ctx)?,
                "extent" => cfg.extent = value.parse().with_context(ctx)?,
                "z_min" => cfg.z_min = value.parse().with_context(ctx)?,
                "z_max" => cfg.z_max = value.parse().with_context(ctx)?,
                "bev_stride" => cfg.bev_stride = value.parse().with_context(ctx)?,
                "sensor_height" => cfg.sensor_height = value.parse().with_context(ctx)?,
                "image_rows" => cfg.image_rows = value.parse().with_context(ctx)?,
                "image_cols" => cfg.image_cols = value.parse().with_context(ctx)?,
                "augment_steps" => cfg.augment_steps = value.parse().with_context(ctx)?,
                other => bail!("unknown config key {other:?}"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.references == 0 || self.tokens_per_type == 0 {
            bail!("references and tokens_per_type must be positive");
        }
        if self.model_dim == 0 || self.heads == 0 || self.model_dim % self.heads != 0 {
            bail!("model_dim must be a positive multiple of heads");
        }
        if !(self.radius_voxel > 0.0 && self.radius_point > 0.0 && self.extent > 0.0) {
            bail!("radii and extent must be positive");
        }
        if self.voxel_size.iter().any(|s| *s <= 0.0) || self.z_min >= self.z_max {
            bail!("invalid voxel grid geometry");
        }
        if self.bev_stride == 0 || self.kernel == 0 || self.interp_k == 0 || self.knn_window == 0 {
            bail!("strides, kernel, and knn parameters must be positive");
        }
        Ok(())
    }
}

/// Synthetic scene parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Horizontal extent (meters); background covers a disc of this diameter.
    pub extent: f64,
    pub objects: usize,
    pub points_per_object: usize,
    pub background_points: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            extent: 60.0,
            objects: 10,
            points_per_object: 300,
            background_points: 20_000,
            noise_sigma: 0.02,
            seed: 1,
        }
    }
}

impl SceneSpec {
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut spec = SceneSpec::default();
        for (key, value) in parse_kv(text)? {
            let ctx = || format!("key {key}");
            match key {
                "extent" => spec.extent = value.parse().with_context(ctx)?,
                "objects" => spec.objects = value.parse().with_context(ctx)?,
                "points_per_object" => {
                    spec.points_per_object = value.parse().with_context(ctx)?
                }
                "background_points" => {
                    spec.background_points = value.parse().with_context(ctx)?
                }
                "noise_sigma" => spec.noise_sigma = value.parse().with_context(ctx)?,
                "seed" => spec.seed = value.parse().with_context(ctx)?,
                other => bail!("unknown scene key {other:?}"),
            }
        }
        if !(spec.extent > 0.0) || spec.noise_sigma < 0.0 {
            bail!("extent must be positive and noise_sigma non-negative");
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pass_validation() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = PipelineConfig::from_kv_text(
            "# comment\nseed = 9\nreferences=64\npos_encoding = bias\nball_mode=sequential\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.references, 64);
        assert_eq!(cfg.pos_encoding, PosEncodingMode::BiasRelative);
        assert_eq!(cfg.ball_mode, BallMode::Sequential);
        // untouched keys keep defaults
        assert_eq!(cfg.kernel, 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_kv_text("refrences = 12\n").is_err());
        assert!(SceneSpec::from_kv_text("objcts = 2\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(PipelineConfig::from_kv_text("model_dim = 130\n").is_err()); // not divisible by 4 heads
        assert!(PipelineConfig::from_kv_text("ball_mode = sometimes\n").is_err());
        assert!(PipelineConfig::from_kv_text("z_min = 5\nz_max = -5\n").is_err());
    }

    #[test]
    fn scene_spec_parses() {
        let s = SceneSpec::from_kv_text("extent=40\nobjects=3\nseed=7\n").unwrap();
        assert_eq!(s.extent, 40.0);
        assert_eq!(s.objects, 3);
        assert_eq!(s.seed, 7);
        assert_eq!(s.points_per_object, SceneSpec::default().points_per_object);
    }
}
