//! Small dense helpers. Matrices here are at most a few dozen entries wide.

use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row vectors. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Row vector times matrix: `z A`, with `z` of length `rows`.
    pub fn left_mul(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += zi * a;
            }
        }
        out
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Matrix {
        let mut m = Matrix::zeros(self.rows, end - start);
        for i in 0..self.rows {
            for j in start..end {
                m.set(i, j - start, self.get(i, j));
            }
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn dist1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Divides by the 1-norm. The zero vector is returned unchanged.
pub fn normalize1(v: &[f64]) -> Vec<f64> {
    let n = norm1(v);
    if n == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_mul_is_row_times_matrix() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.left_mul(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(a.left_mul(&[0.0, 2.0]), vec![6.0, 8.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_none());
    }

    #[test]
    fn column_block_splits() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert_eq!(a.column_block(2, 4).row(0), &[3.0, 4.0]);
    }
}
