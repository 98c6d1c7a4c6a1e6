//! Dense row-major f64 matrix. Doubles as the per-row feature storage used
//! throughout the crate (n rows of dimension d) and as the weight matrices of
//! the attention block. Deliberately minimal; this is not a linear algebra
//! library.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, CoreError> {
        if data.len() != rows * cols {
            return Err(CoreError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
                what: "matrix data length",
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Empty matrix with a known column count (zero rows).
    pub fn empty(cols: usize) -> Self {
        Matrix {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    /// Entries drawn uniformly from `[-bound, bound]`.
    pub fn seeded_uniform(rows: usize, cols: usize, bound: f64, rng: &mut SeededRng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<(), CoreError> {
        if row.len() != self.cols {
            return Err(CoreError::ShapeMismatch {
                expected: self.cols,
                got: row.len(),
                what: "row length",
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * rhs`, shapes `(n x k) * (k x m) -> (n x m)`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix, CoreError> {
        if self.cols != rhs.rows {
            return Err(CoreError::ShapeMismatch {
                expected: self.cols,
                got: rhs.rows,
                what: "matmul inner dimension",
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        Ok(out)
    }
}

/// `row * m + bias` for a single row vector.
pub fn row_affine(row: &[f64], m: &Matrix, bias: &[f64]) -> Result<Vec<f64>, CoreError> {
    if row.len() != m.rows() {
        return Err(CoreError::ShapeMismatch {
            expected: m.rows(),
            got: row.len(),
            what: "affine input length",
        });
    }
    if bias.len() != m.cols() {
        return Err(CoreError::ShapeMismatch {
            expected: m.cols(),
            got: bias.len(),
            what: "affine bias length",
        });
    }
    let mut out = bias.to_vec();
    for (k, &a) in row.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(m.row(k)) {
            *o += a * w;
        }
    }
    Ok(out)
}
