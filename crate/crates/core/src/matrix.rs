//! Dense row-major matrix, just big enough for the weight mechanics here.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    /// Builds a matrix from its rows. Rejects ragged input.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::RaggedMatrix {
                    row: i + 1,
                    expected: cols,
                    got: row.len(),
                });
            }
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: S) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// All entries in row-major order.
    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.data.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, S> {
        self.data.iter_mut()
    }

    /// Rows as owned vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// Matrix with row `i` moved to `images[i]`.
    pub fn permuted_rows(&self, images: &[usize]) -> Self {
        assert_eq!(images.len(), self.rows, "row permutation length");
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (src, &dst) in images.iter().enumerate() {
            out.data[dst * self.cols..(dst + 1) * self.cols].copy_from_slice(self.row(src));
        }
        out
    }

    /// Matrix with column `j` moved to `images[j]`.
    pub fn permuted_cols(&self, images: &[usize]) -> Self {
        assert_eq!(images.len(), self.cols, "column permutation length");
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (src, &dst) in images.iter().enumerate() {
                out.data[r * self.cols + dst] = self.data[r * self.cols + src];
            }
        }
        out
    }

    /// Matrix-vector product. Each output entry accumulates its dot product
    /// in ascending column order, the crate-wide determinism contract.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec input length");
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc = S::zero();
            for (w, xi) in self.row(r).iter().zip(x) {
                acc = acc + *w * *xi;
            }
            out.push(acc);
        }
        out
    }
}
