//! Hand-rolled CSV for the small fixed schemas this project uses: point
//! fixtures, box lists, sparse-grid goldens, range-image dumps, and
//! benchmark reports. All values are plain numbers, so no quoting is needed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pointvoxel_core::range_image::VirtualRangeImage;
use pointvoxel_core::voxel::{SparseBevGrid, SparseVoxelGrid};
use pointvoxel_core::{BoundingBox3D, Matrix, PointCloud, Vec3};

/// Reads a point fixture with header `x,y,z[,f0,f1,...]`.
pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty csv")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "x" || cols[1] != "y" || cols[2] != "z" {
        bail!("expected header x,y,z[,f0,...], got {header:?}");
    }
    let dim = cols.len() - 3;
    let mut positions = Vec::new();
    let mut feats = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("line {}", lineno + 2))?;
        if fields.len() != cols.len() {
            bail!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                fields.len()
            );
        }
        positions.push(Vec3::new(fields[0], fields[1], fields[2]));
        feats.extend_from_slice(&fields[3..]);
    }
    if dim == 0 {
        Ok(PointCloud::new(positions)?)
    } else {
        let n = positions.len();
        Ok(PointCloud::with_features(
            positions,
            Matrix::from_vec(n, dim, feats)?,
        )?)
    }
}

const BOX_HEADER: &str = "cx,cy,cz,length,width,height,yaw";

pub fn write_boxes_csv(path: &Path, boxes: &[BoundingBox3D]) -> Result<()> {
    let mut out = String::from(BOX_HEADER);
    out.push('\n');
    for b in boxes {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            b.center.x, b.center.y, b.center.z, b.size[0], b.size[1], b.size[2], b.yaw
        )?;
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

pub fn read_boxes_csv(path: &Path) -> Result<Vec<BoundingBox3D>> {
    let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty csv")?;
    if header.trim() != BOX_HEADER {
        bail!("expected header {BOX_HEADER:?}, got {header:?}");
    }
    let mut boxes = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("line {}", lineno + 2))?;
        if f.len() != 7 {
            bail!("line {}: expected 7 fields", lineno + 2);
        }
        boxes.push(BoundingBox3D::new(
            Vec3::new(f[0], f[1], f[2]),
            [f[3], f[4], f[5]],
            f[6],
        )?);
    }
    Ok(boxes)
}

/// Golden dump of a sparse 3D grid: `ix,iy,iz,f0,...`.
pub fn write_sparse_grid_csv(path: &Path, grid: &SparseVoxelGrid) -> Result<()> {
    let mut out = String::from("ix,iy,iz");
    for j in 0..grid.feature_dim() {
        write!(out, ",f{j}")?;
    }
    out.push('\n');
    for i in 0..grid.len() {
        let c = grid.cells()[i];
        write!(out, "{},{},{}", c[0], c[1], c[2])?;
        for v in grid.feature(i) {
            write!(out, ",{v}")?;
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

/// Golden dump of a sparse BEV grid: `ix,iy,f0,...`.
pub fn write_sparse_bev_csv(path: &Path, bev: &SparseBevGrid) -> Result<()> {
    let mut out = String::from("ix,iy");
    for j in 0..bev.feature_dim() {
        write!(out, ",f{j}")?;
    }
    out.push('\n');
    for i in 0..bev.len() {
        let c = bev.cells()[i];
        write!(out, "{},{}", c[0], c[1])?;
        for v in bev.feature(i) {
            write!(out, ",{v}")?;
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

/// Debug dump of the non-empty range-image pixels: `row,col,start,end`.
pub fn write_range_image_csv(path: &Path, img: &VirtualRangeImage) -> Result<()> {
    let mut out = String::from("row,col,start,end\n");
    let spec = img.spec();
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let (s, e) = img.pixel_range(row, col);
            if e > s {
                writeln!(out, "{row},{col},{s},{e}")?;
            }
        }
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}

/// Generic report writer: a header row plus numeric rows, used by the bench
/// and pipeline reports.
pub fn write_report_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("write {}", path.display()))
}
