//! Dense row-major sample matrix shared by the fitting code paths.

use crate::error::{Error, Result};

/// `rows` samples of dimension `dim`, stored row-major in f32.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl DataMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::dims(format!(
                "matrix data length {} != rows {} x dim {}",
                data.len(),
                rows,
                dim
            )));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self { rows, dim, data: vec![0.0; rows * dim] }
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::dims("ragged rows in matrix construction".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), dim, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f32]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Per-column mean in f64.
    pub fn column_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0f64; self.dim];
        for i in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += *v as f64;
            }
        }
        let n = self.rows.max(1) as f64;
        for m in &mut mean {
            *m /= n;
        }
        mean
    }

    /// Per-column variance (population) in f64.
    pub fn column_variance(&self) -> Vec<f64> {
        let mean = self.column_mean();
        let mut var = vec![0.0f64; self.dim];
        for i in 0..self.rows {
            for ((v, x), m) in var.iter_mut().zip(self.row(i)).zip(&mean) {
                let d = *x as f64 - *m;
                *v += d * d;
            }
        }
        let n = self.rows.max(1) as f64;
        for v in &mut var {
            *v /= n;
        }
        var
    }

    /// Keeps the rows listed in `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> DataMatrix {
        let mut out = DataMatrix { rows: 0, dim: self.dim, data: Vec::with_capacity(idx.len() * self.dim) };
        for &i in idx {
            out.push_row(self.row(i));
        }
        out
    }
}
