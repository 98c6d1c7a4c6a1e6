//! Multi-head cross-attention block over voxel/point tokens.
//!
//! One block computes, per content query,
//!
//! ```text
//! X = LayerNorm(Attention(F_s, F_query, P_s, P_query) + F_query)
//! Y = LayerNorm(FFN(X) + X)
//! ```
//!
//! with scaled dot-product attention over the valid tokens only and a
//! selectable positional-encoding mode. Inference only: weights are seeded
//! at construction and never trained, dropout does not exist here.
//!
//! Positional modes:
//! - `Absolute`: a 2-layer perceptron of the raw coordinate added to key
//!   features (token side) and to the query feature (query side);
//! - `BiasRelative`: a linear map of the relative offset producing one
//!   additive logit bias per head;
//! - `ContextualRelative`: a 2-layer perceptron of the relative offset split
//!   into per-head key-side vectors (dotted with the projected query and
//!   added to the logit, same scaling as the main term) and value-side
//!   vectors (added to the attended value).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fm;
use crate::geom::Vec3;
use crate::matrix::{row_affine, Matrix};
use crate::rng::SeededRng;
use crate::tokens::TokenSet;

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosEncodingMode {
    None,
    ContextualRelative,
    BiasRelative,
    Absolute,
}

/// Two-layer perceptron with ReLU hidden activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl Mlp {
    fn seeded(d_in: usize, d_hidden: usize, d_out: usize, rng: &mut SeededRng) -> Self {
        let bound_in = 1.0 / fm::sqrt(d_in as f64);
        let bound_hidden = 1.0 / fm::sqrt(d_hidden as f64);
        Mlp {
            w1: Matrix::seeded_uniform(d_in, d_hidden, bound_in, rng),
            b1: (0..d_hidden).map(|_| rng.uniform(-bound_in, bound_in)).collect(),
            w2: Matrix::seeded_uniform(d_hidden, d_out, bound_hidden, rng),
            b2: (0..d_out)
                .map(|_| rng.uniform(-bound_hidden, bound_hidden))
                .collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, CoreError> {
        let mut hidden = row_affine(x, &self.w1, &self.b1)?;
        for h in hidden.iter_mut() {
            *h = h.max(0.0);
        }
        row_affine(&hidden, &self.w2, &self.b2)
    }
}

/// Shape of one attention block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    /// Hidden width of the positional perceptrons.
    pub pos_hidden: usize,
}

impl Default for BlockShape {
    fn default() -> Self {
        BlockShape {
            dim: 128,
            heads: 4,
            ffn_dim: 512,
            pos_hidden: 16,
        }
    }
}

/// All parameters of one block. Positional parameters for every mode are
/// materialized at construction so the mode can be switched per call.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub dim: usize,
    pub heads: usize,
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub wo: Matrix,
    pub ffn_w1: Matrix,
    pub ffn_b1: Vec<f64>,
    pub ffn_w2: Matrix,
    pub ffn_b2: Vec<f64>,
    pub ln1_gamma: Vec<f64>,
    pub ln1_beta: Vec<f64>,
    pub ln2_gamma: Vec<f64>,
    pub ln2_beta: Vec<f64>,
    /// Absolute mode: coordinate (3) -> d, added to keys and queries.
    pub pos_abs: Mlp,
    /// Bias mode: relative offset (3) -> one logit bias per head.
    pub pos_bias_w: Matrix,
    pub pos_bias_b: Vec<f64>,
    /// Contextual mode: relative offset (3) -> 2d (key-side || value-side).
    pub pos_ctx: Mlp,
}

impl AttentionWeights {
    /// Seeded initialization: uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
    /// for linear weights, ones/zeros for the layer norms.
    pub fn seeded(shape: &BlockShape, rng: &mut SeededRng) -> Result<Self, CoreError> {
        let d = shape.dim;
        if d == 0 || shape.heads == 0 || d % shape.heads != 0 || shape.ffn_dim == 0 {
            return Err(CoreError::ShapeMismatch {
                expected: shape.heads.max(1),
                got: d,
                what: "attention dim (must be a positive multiple of heads)",
            });
        }
        let bd = 1.0 / fm::sqrt(d as f64);
        let bf = 1.0 / fm::sqrt(shape.ffn_dim as f64);
        let b3 = 1.0 / fm::sqrt(3.0);
        Ok(AttentionWeights {
            dim: d,
            heads: shape.heads,
            wq: Matrix::seeded_uniform(d, d, bd, rng),
            wk: Matrix::seeded_uniform(d, d, bd, rng),
            wv: Matrix::seeded_uniform(d, d, bd, rng),
            wo: Matrix::seeded_uniform(d, d, bd, rng),
            ffn_w1: Matrix::seeded_uniform(d, shape.ffn_dim, bd, rng),
            ffn_b1: (0..shape.ffn_dim).map(|_| rng.uniform(-bd, bd)).collect(),
            ffn_w2: Matrix::seeded_uniform(shape.ffn_dim, d, bf, rng),
            ffn_b2: (0..d).map(|_| rng.uniform(-bf, bf)).collect(),
            ln1_gamma: vec![1.0; d],
            ln1_beta: vec![0.0; d],
            ln2_gamma: vec![1.0; d],
            ln2_beta: vec![0.0; d],
            pos_abs: Mlp::seeded(3, shape.pos_hidden, d, rng),
            pos_bias_w: Matrix::seeded_uniform(3, shape.heads, b3, rng),
            pos_bias_b: (0..shape.heads).map(|_| rng.uniform(-b3, b3)).collect(),
            pos_ctx: Mlp::seeded(3, shape.pos_hidden, 2 * d, rng),
        })
    }

    /// Identity projections, zeroed FFN and positional parameters, unit layer
    /// norms. Attention reduces to a plain softmax average of token features;
    /// handy for hand-computable tests.
    pub fn identity(dim: usize, heads: usize) -> Result<Self, CoreError> {
        if dim == 0 || heads == 0 || dim % heads != 0 {
            return Err(CoreError::ShapeMismatch {
                expected: heads.max(1),
                got: dim,
                what: "attention dim (must be a positive multiple of heads)",
            });
        }
        let eye = {
            let mut m = Matrix::zeros(dim, dim);
            for i in 0..dim {
                m.set(i, i, 1.0);
            }
            m
        };
        Ok(AttentionWeights {
            dim,
            heads,
            wq: eye.clone(),
            wk: eye.clone(),
            wv: eye.clone(),
            wo: eye,
            ffn_w1: Matrix::zeros(dim, dim),
            ffn_b1: vec![0.0; dim],
            ffn_w2: Matrix::zeros(dim, dim),
            ffn_b2: vec![0.0; dim],
            ln1_gamma: vec![1.0; dim],
            ln1_beta: vec![0.0; dim],
            ln2_gamma: vec![1.0; dim],
            ln2_beta: vec![0.0; dim],
            pos_abs: Mlp {
                w1: Matrix::zeros(3, 1),
                b1: vec![0.0],
                w2: Matrix::zeros(1, dim),
                b2: vec![0.0; dim],
            },
            pos_bias_w: Matrix::zeros(3, heads),
            pos_bias_b: vec![0.0; heads],
            pos_ctx: Mlp {
                w1: Matrix::zeros(3, 1),
                b1: vec![0.0],
                w2: Matrix::zeros(1, 2 * dim),
                b2: vec![0.0; 2 * dim],
            },
        })
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }
}

fn layer_norm(row: &mut [f64], gamma: &[f64], beta: &[f64]) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv = 1.0 / fm::sqrt(var + LAYER_NORM_EPS);
    for (i, x) in row.iter_mut().enumerate() {
        *x = (*x - mean) * inv * gamma[i] + beta[i];
    }
}

fn check_shapes(
    f_query: &Matrix,
    p_query: &[Vec3],
    tokens: &TokenSet,
    w: &AttentionWeights,
) -> Result<(), CoreError> {
    if f_query.cols() != w.dim {
        return Err(CoreError::ShapeMismatch {
            expected: w.dim,
            got: f_query.cols(),
            what: "content query dim",
        });
    }
    if p_query.len() != f_query.rows() {
        return Err(CoreError::ShapeMismatch {
            expected: f_query.rows(),
            got: p_query.len(),
            what: "reference point count",
        });
    }
    if !tokens.is_empty() && tokens.dim() != w.dim {
        return Err(CoreError::ShapeMismatch {
            expected: w.dim,
            got: tokens.dim(),
            what: "token feature dim",
        });
    }
    Ok(())
}

/// Multi-head cross-attention output (before residual, norm, and FFN).
/// Queries with no valid token get a zero row.
pub fn cross_attention(
    f_query: &Matrix,
    p_query: &[Vec3],
    tokens: &TokenSet,
    w: &AttentionWeights,
    mode: PosEncodingMode,
) -> Result<Matrix, CoreError> {
    check_shapes(f_query, p_query, tokens, w)?;
    let m = f_query.rows();
    let d = w.dim;
    let dh = w.head_dim();
    let scale = 1.0 / fm::sqrt(dh as f64);

    let valid: Vec<usize> = (0..tokens.len()).filter(|&t| tokens.valid[t]).collect();
    let mut out = Matrix::zeros(m, d);
    if valid.is_empty() {
        return Ok(out);
    }

    // token-side projections, keys optionally shifted by the absolute encoding
    let zeros = vec![0.0; d];
    let mut keys = Matrix::zeros(valid.len(), d);
    let mut values = Matrix::zeros(valid.len(), d);
    for (vi, &t) in valid.iter().enumerate() {
        let feat = tokens.features.row(t);
        let key_in = if mode == PosEncodingMode::Absolute {
            let c = tokens.coords[t];
            let enc = w.pos_abs.forward(&[c.x, c.y, c.z])?;
            feat.iter().zip(&enc).map(|(f, e)| f + e).collect::<Vec<f64>>()
        } else {
            feat.to_vec()
        };
        keys.row_mut(vi)
            .copy_from_slice(&row_affine(&key_in, &w.wk, &zeros)?);
        values
            .row_mut(vi)
            .copy_from_slice(&row_affine(feat, &w.wv, &zeros)?);
    }

    for qi in 0..m {
        let q_in = if mode == PosEncodingMode::Absolute {
            let c = p_query[qi];
            let enc = w.pos_abs.forward(&[c.x, c.y, c.z])?;
            f_query
                .row(qi)
                .iter()
                .zip(&enc)
                .map(|(f, e)| f + e)
                .collect::<Vec<f64>>()
        } else {
            f_query.row(qi).to_vec()
        };
        let q = row_affine(&q_in, &w.wq, &zeros)?;

        // relative positional terms per valid token
        let rel_ctx: Option<Vec<Vec<f64>>> = if mode == PosEncodingMode::ContextualRelative {
            let mut all = Vec::with_capacity(valid.len());
            for &t in &valid {
                let r = tokens.coords[t] - p_query[qi];
                all.push(w.pos_ctx.forward(&[r.x, r.y, r.z])?);
            }
            Some(all)
        } else {
            None
        };

        let mut logits = vec![vec![0.0f64; valid.len()]; w.heads];
        for h in 0..w.heads {
            let qh = &q[h * dh..(h + 1) * dh];
            for (vi, &t) in valid.iter().enumerate() {
                let kh = &keys.row(vi)[h * dh..(h + 1) * dh];
                let mut logit = qh.iter().zip(kh).map(|(a, b)| a * b).sum::<f64>() * scale;
                match mode {
                    PosEncodingMode::BiasRelative => {
                        let r = tokens.coords[t] - p_query[qi];
                        let bias = row_affine(&[r.x, r.y, r.z], &w.pos_bias_w, &w.pos_bias_b)?;
                        logit += bias[h];
                    }
                    PosEncodingMode::ContextualRelative => {
                        let ctx = &rel_ctx.as_ref().expect("computed above")[vi];
                        let kr = &ctx[h * dh..(h + 1) * dh];
                        logit += qh.iter().zip(kr).map(|(a, b)| a * b).sum::<f64>() * scale;
                    }
                    _ => {}
                }
                logits[h][vi] = logit;
            }
        }

        let out_row = out.row_mut(qi);
        for h in 0..w.heads {
            // numerically stable softmax over the valid tokens
            let max = logits[h]
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut weights: Vec<f64> = logits[h].iter().map(|&l| fm::exp(l - max)).collect();
            let total: f64 = weights.iter().sum();
            for a in weights.iter_mut() {
                *a /= total;
            }
            for (vi, &a) in weights.iter().enumerate() {
                let vh = &values.row(vi)[h * dh..(h + 1) * dh];
                if let Some(ctx) = &rel_ctx {
                    let vr = &ctx[vi][d + h * dh..d + (h + 1) * dh];
                    for j in 0..dh {
                        out_row[h * dh + j] += a * (vh[j] + vr[j]);
                    }
                } else {
                    for j in 0..dh {
                        out_row[h * dh + j] += a * vh[j];
                    }
                }
            }
        }
    }

    // output projection
    out.matmul(&w.wo)
}

/// One full block: attention, residual, norm, FFN, residual, norm.
pub fn attention_forward(
    f_query: &Matrix,
    p_query: &[Vec3],
    tokens: &TokenSet,
    w: &AttentionWeights,
    mode: PosEncodingMode,
) -> Result<Matrix, CoreError> {
    let attn = cross_attention(f_query, p_query, tokens, w, mode)?;
    let m = f_query.rows();
    let mut out = Matrix::zeros(m, w.dim);
    for qi in 0..m {
        let mut x: Vec<f64> = attn
            .row(qi)
            .iter()
            .zip(f_query.row(qi))
            .map(|(a, f)| a + f)
            .collect();
        layer_norm(&mut x, &w.ln1_gamma, &w.ln1_beta);
        let mut hidden = row_affine(&x, &w.ffn_w1, &w.ffn_b1)?;
        for h in hidden.iter_mut() {
            *h = h.max(0.0);
        }
        let ffn = row_affine(&hidden, &w.ffn_w2, &w.ffn_b2)?;
        let mut y: Vec<f64> = ffn.iter().zip(&x).map(|(a, b)| a + b).collect();
        layer_norm(&mut y, &w.ln2_gamma, &w.ln2_beta);
        out.row_mut(qi).copy_from_slice(&y);
    }
    Ok(out)
}

/// A stack of blocks ("apply one Transformer block" by default, more when
/// configured). Each block refines the query features against the same
/// tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerStack {
    pub blocks: Vec<AttentionWeights>,
}

impl TransformerStack {
    pub fn seeded(
        shape: &BlockShape,
        depth: usize,
        rng: &mut SeededRng,
    ) -> Result<Self, CoreError> {
        let blocks = (0..depth.max(1))
            .map(|_| AttentionWeights::seeded(shape, rng))
            .collect::<Result<_, _>>()?;
        Ok(TransformerStack { blocks })
    }

    pub fn forward(
        &self,
        f_query: &Matrix,
        p_query: &[Vec3],
        tokens: &TokenSet,
        mode: PosEncodingMode,
    ) -> Result<Matrix, CoreError> {
        let mut x = f_query.clone();
        for block in &self.blocks {
            x = attention_forward(&x, p_query, tokens, block, mode)?;
        }
        Ok(x)
    }
}
