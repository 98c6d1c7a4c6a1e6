//! PCB v1 point cloud container.
//!
//! Little-endian binary: magic `PCB1`, u32 point count `n`, u32 feature dim
//! `d` (0 when absent), then `n*3` f32 positions, then `n*d` f32 features.
//! Geometry is f64 in memory; writing rounds to f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use pointvoxel_core::{Matrix, PointCloud, Vec3};

const MAGIC: &[u8; 4] = b"PCB1";

pub fn write_pcb(path: &Path, pc: &PointCloud) -> Result<()> {
    let file = File::create(path).with_context(|| format!("create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(pc.len() as u32).to_le_bytes())?;
    w.write_all(&(pc.feature_dim() as u32).to_le_bytes())?;
    for p in pc.positions() {
        for v in [p.x, p.y, p.z] {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    if let Some(f) = pc.features() {
        for v in f.data() {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pcb(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).with_context(|| format!("open {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).context("truncated header")?;
    if &magic != MAGIC {
        bail!("not a PCB v1 file: bad magic {magic:?}");
    }
    let n = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;

    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, y, z) = (read_f32(&mut r)?, read_f32(&mut r)?, read_f32(&mut r)?);
        positions.push(Vec3::new(x as f64, y as f64, z as f64));
    }
    let cloud = if d == 0 {
        PointCloud::new(positions)?
    } else {
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            data.push(read_f32(&mut r)? as f64);
        }
        PointCloud::with_features(positions, Matrix::from_vec(n, d, data)?)?
    };
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        bail!("trailing bytes after {n} points");
    }
    Ok(cloud)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).context("truncated u32")?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32(r: &mut impl Read) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).context("truncated f32")?;
    Ok(f32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip_with_features() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.pcb");
        let pc = PointCloud::with_features(
            vec![Vec3::new(1.5, -2.25, 0.125), Vec3::new(0.0, 4.0, -8.5)],
            Matrix::from_vec(2, 2, vec![0.5, 1.0, -3.5, 2.0]).unwrap(),
        )
        .unwrap();
        write_pcb(&path, &pc).unwrap();
        let back = read_pcb(&path).unwrap();
        // the chosen values are exactly representable in f32
        assert_eq!(back, pc);
    }

    #[test]
    fn round_trip_without_features() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.pcb");
        let pc = PointCloud::new(vec![Vec3::new(7.0, 8.0, 9.0)]).unwrap();
        write_pcb(&path, &pc).unwrap();
        assert_eq!(read_pcb(&path).unwrap(), pc);
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bogus.pcb");
        std::fs::write(&path, b"NOPE\0\0\0\0\0\0\0\0").unwrap();
        assert!(read_pcb(&path).is_err());
    }

    #[test]
    fn rejects_truncation_and_trailing_garbage() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.pcb");
        let pc = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        write_pcb(&path, &pc).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(read_pcb(&path).is_err());
        let mut extended = bytes.clone();
        extended.push(0);
        std::fs::write(&path, &extended).unwrap();
        assert!(read_pcb(&path).is_err());
    }
}
