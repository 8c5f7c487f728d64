//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::matrix::DataMatrix;

/// Symmetric eigendecomposition with eigenvalues sorted descending and a
/// deterministic sign convention (largest-magnitude entry positive, ties by
/// lowest index).
pub fn sym_eigen_desc(mat: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    debug_assert_eq!(mat.len(), n * n);
    let m = DMatrix::from_row_slice(n, n, mat);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        values.push(eig.eigenvalues[i]);
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        vectors.push(v);
    }
    (values, vectors)
}

/// Flips a vector so its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Extends `rows` (orthonormal) to a full orthonormal basis of dimension
/// `dim` by Gram-Schmidt over `candidates` first, then the canonical basis.
pub fn complete_orthonormal(rows: &mut Vec<Vec<f64>>, dim: usize, candidates: &[Vec<f64>]) {
    let mut pool: Vec<Vec<f64>> = candidates.to_vec();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        pool.push(e);
    }
    let mut pool_iter = pool.into_iter();
    while rows.len() < dim {
        let cand = match pool_iter.next() {
            Some(c) => c,
            None => break,
        };
        let mut v = cand;
        for r in rows.iter() {
            let dot: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(r) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for x in &mut v {
                *x /= norm;
            }
            fix_sign(&mut v);
            rows.push(v);
        }
    }
    assert_eq!(rows.len(), dim, "could not complete orthonormal basis");
}

/// Linear PCA projection fitted on sample rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub input_dim: usize,
    pub out_dim: usize,
    pub mean: Vec<f32>,
    /// `out_dim x input_dim`, rows orthonormal.
    pub basis: Vec<f32>,
}

impl Pca {
    /// Fits the top `out_dim` principal components of `data`.
    pub fn fit(data: &DataMatrix, out_dim: usize) -> Pca {
        let n = data.dim;
        let k = out_dim.min(n).min(data.rows.max(1));
        let mean = data.column_mean();
        // Raw second moment, then centered covariance.
        let mut cov = vec![0.0f64; n * n];
        for r in 0..data.rows {
            let row = data.row(r);
            for i in 0..n {
                let di = row[i] as f64 - mean[i];
                let base = i * n;
                for (j, mj) in mean.iter().enumerate().skip(i) {
                    cov[base + j] += di * (row[j] as f64 - mj);
                }
            }
        }
        let norm = 1.0 / data.rows.max(1) as f64;
        for i in 0..n {
            for j in i..n {
                let v = cov[i * n + j] * norm;
                cov[i * n + j] = v;
                cov[j * n + i] = v;
            }
        }
        let (_, vectors) = sym_eigen_desc(&cov, n);
        let mut basis = Vec::with_capacity(k * n);
        for v in vectors.iter().take(k) {
            basis.extend(v.iter().map(|x| *x as f32));
        }
        Pca {
            input_dim: n,
            out_dim: k,
            mean: mean.iter().map(|x| *x as f32).collect(),
            basis,
        }
    }

    pub fn project(&self, row: &[f32]) -> Vec<f32> {
        debug_assert_eq!(row.len(), self.input_dim);
        let mut out = Vec::with_capacity(self.out_dim);
        for r in 0..self.out_dim {
            let b = &self.basis[r * self.input_dim..(r + 1) * self.input_dim];
            let mut acc = 0.0f64;
            for ((x, m), w) in row.iter().zip(&self.mean).zip(b) {
                acc += (*x as f64 - *m as f64) * *w as f64;
            }
            out.push(acc as f32);
        }
        out
    }

    pub fn project_all(&self, data: &DataMatrix) -> DataMatrix {
        let mut out = DataMatrix::zeros(0, self.out_dim);
        out.data.reserve(data.rows * self.out_dim);
        for r in 0..data.rows {
            out.push_row(&self.project(data.row(r)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_identity() {
        let (vals, vecs) = sym_eigen_desc(&[2.0, 0.0, 0.0, 1.0], 2);
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        assert!((vecs[0][0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn completion_produces_orthonormal_rows() {
        let mut rows = vec![vec![0.5f64.sqrt(), 0.5f64.sqrt(), 0.0]];
        complete_orthonormal(&mut rows, 3, &[]);
        assert_eq!(rows.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pca_finds_dominant_direction() {
        // Points along (1,1) with tiny orthogonal noise.
        let mut rows = Vec::new();
        for i in 0..200 {
            let t = (i as f32 - 100.0) / 50.0;
            let noise = if i % 2 == 0 { 0.01 } else { -0.01 };
            rows.push(vec![t + noise, t - noise]);
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let pca = Pca::fit(&data, 1);
        let b = &pca.basis;
        let dir = (b[0] / b[1]).abs();
        assert!((dir - 1.0).abs() < 0.05, "basis {:?}", b);
    }
}
