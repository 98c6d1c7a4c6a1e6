//! Weight snapshot format: one flat little-endian f32 blob plus a JSON
//! sidecar manifest listing tensor names, shapes, and byte offsets.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pointvoxel_core::attn::{AttentionWeights, Mlp, TransformerStack};
use pointvoxel_core::Matrix;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub pos_hidden: usize,
    pub blocks: usize,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: usize,
    /// Element count.
    pub len: usize,
}

fn block_tensors(w: &AttentionWeights, b: usize) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mat = |m: &Matrix| (vec![m.rows(), m.cols()], m.data().to_vec());
    let vecp = |v: &[f64]| (vec![v.len()], v.to_vec());
    let mut out = Vec::new();
    let mut push = |name: &str, (shape, data): (Vec<usize>, Vec<f64>)| {
        out.push((format!("block{b}.{name}"), shape, data));
    };
    push("wq", mat(&w.wq));
    push("wk", mat(&w.wk));
    push("wv", mat(&w.wv));
    push("wo", mat(&w.wo));
    push("ffn_w1", mat(&w.ffn_w1));
    push("ffn_b1", vecp(&w.ffn_b1));
    push("ffn_w2", mat(&w.ffn_w2));
    push("ffn_b2", vecp(&w.ffn_b2));
    push("ln1_gamma", vecp(&w.ln1_gamma));
    push("ln1_beta", vecp(&w.ln1_beta));
    push("ln2_gamma", vecp(&w.ln2_gamma));
    push("ln2_beta", vecp(&w.ln2_beta));
    push("pos_abs.w1", mat(&w.pos_abs.w1));
    push("pos_abs.b1", vecp(&w.pos_abs.b1));
    push("pos_abs.w2", mat(&w.pos_abs.w2));
    push("pos_abs.b2", vecp(&w.pos_abs.b2));
    push("pos_bias_w", mat(&w.pos_bias_w));
    push("pos_bias_b", vecp(&w.pos_bias_b));
    push("pos_ctx.w1", mat(&w.pos_ctx.w1));
    push("pos_ctx.b1", vecp(&w.pos_ctx.b1));
    push("pos_ctx.w2", mat(&w.pos_ctx.w2));
    push("pos_ctx.b2", vecp(&w.pos_ctx.b2));
    out
}

/// Writes `<blob_path>` and `<manifest_path>`.
pub fn save_stack(blob_path: &Path, manifest_path: &Path, stack: &TransformerStack) -> Result<()> {
    let first = stack.blocks.first().context("empty stack")?;
    let mut manifest = Manifest {
        dim: first.dim,
        heads: first.heads,
        ffn_dim: first.ffn_b1.len(),
        pos_hidden: first.pos_abs.b1.len(),
        blocks: stack.blocks.len(),
        tensors: Vec::new(),
    };
    let mut blob: Vec<u8> = Vec::new();
    for (b, w) in stack.blocks.iter().enumerate() {
        for (name, shape, data) in block_tensors(w, b) {
            manifest.tensors.push(TensorEntry {
                name,
                shape,
                offset: blob.len(),
                len: data.len(),
            });
            for v in data {
                blob.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    fs::write(blob_path, blob).with_context(|| format!("write {}", blob_path.display()))?;
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("write {}", manifest_path.display()))?;
    Ok(())
}

fn take(
    tensors: &std::collections::HashMap<String, (Vec<usize>, Vec<f64>)>,
    name: &str,
) -> Result<(Vec<usize>, Vec<f64>)> {
    tensors
        .get(name)
        .cloned()
        .with_context(|| format!("manifest missing tensor {name}"))
}

fn take_matrix(
    tensors: &std::collections::HashMap<String, (Vec<usize>, Vec<f64>)>,
    name: &str,
) -> Result<Matrix> {
    let (shape, data) = take(tensors, name)?;
    if shape.len() != 2 {
        bail!("tensor {name} is not a matrix");
    }
    Ok(Matrix::from_vec(shape[0], shape[1], data)?)
}

pub fn load_stack(blob_path: &Path, manifest_path: &Path) -> Result<TransformerStack> {
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(manifest_path)
            .with_context(|| format!("read {}", manifest_path.display()))?,
    )?;
    let blob = fs::read(blob_path).with_context(|| format!("read {}", blob_path.display()))?;

    let mut tensors = std::collections::HashMap::new();
    for t in &manifest.tensors {
        let end = t.offset + t.len * 4;
        if end > blob.len() {
            bail!("tensor {} overruns the blob", t.name);
        }
        if t.shape.iter().product::<usize>() != t.len {
            bail!("tensor {} shape/len mismatch", t.name);
        }
        let data: Vec<f64> = blob[t.offset..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        tensors.insert(t.name.clone(), (t.shape.clone(), data));
    }

    let mut blocks = Vec::with_capacity(manifest.blocks);
    for b in 0..manifest.blocks {
        let m = |n: &str| take_matrix(&tensors, &format!("block{b}.{n}"));
        let v = |n: &str| take(&tensors, &format!("block{b}.{n}")).map(|(_, d)| d);
        blocks.push(AttentionWeights {
            dim: manifest.dim,
            heads: manifest.heads,
            wq: m("wq")?,
            wk: m("wk")?,
            wv: m("wv")?,
            wo: m("wo")?,
            ffn_w1: m("ffn_w1")?,
            ffn_b1: v("ffn_b1")?,
            ffn_w2: m("ffn_w2")?,
            ffn_b2: v("ffn_b2")?,
            ln1_gamma: v("ln1_gamma")?,
            ln1_beta: v("ln1_beta")?,
            ln2_gamma: v("ln2_gamma")?,
            ln2_beta: v("ln2_beta")?,
            pos_abs: Mlp {
                w1: m("pos_abs.w1")?,
                b1: v("pos_abs.b1")?,
                w2: m("pos_abs.w2")?,
                b2: v("pos_abs.b2")?,
            },
            pos_bias_w: m("pos_bias_w")?,
            pos_bias_b: v("pos_bias_b")?,
            pos_ctx: Mlp {
                w1: m("pos_ctx.w1")?,
                b1: v("pos_ctx.b1")?,
                w2: m("pos_ctx.w2")?,
                b2: v("pos_ctx.b2")?,
            },
        });
    }
    Ok(TransformerStack { blocks })
}
