//! Multi-stage invertible Saab transforms over non-overlapping patches.
//!
//! Each stage maps `2x2` patches to coefficient vectors through an
//! orthonormal basis whose first row is the uniform DC direction and whose
//! remaining rows are principal directions of the DC-removed, mean-removed
//! patch population. The stored mean lives in the AC subspace, so the DC
//! coefficient is the raw patch average scaled by `sqrt(dim)` and the whole
//! map stays exactly invertible. Cascading stages halve the spatial extent
//! until a single position carries the full feature vector; no channel is
//! ever pruned, so the end-to-end map preserves dimension.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageops::{ImageTensor, ResidualTensor};
use crate::linalg;
use crate::matrix::DataMatrix;

/// Spatial grid of feature vectors; layout matches [`ImageTensor`]
/// (`idx = (y*width + x)*channels + ch`) with unbounded values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn from_image(img: &ImageTensor) -> Self {
        Self { width: img.width, height: img.height, channels: img.channels, data: img.data.clone() }
    }

    pub fn from_residual(res: &ResidualTensor) -> Self {
        Self { width: res.width, height: res.height, channels: res.channels, data: res.data.clone() }
    }

    pub fn into_residual(self) -> ResidualTensor {
        ResidualTensor::from_raw(self.width, self.height, self.channels, self.data)
    }
}

/// One fitted mean/basis pair covering `window^2 x channels` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SaabKernel {
    pub dim: usize,
    /// Column mean of the DC-removed patches (lies in the AC subspace).
    pub mean: Vec<f32>,
    /// `dim x dim` row-major orthonormal basis; row 0 is the DC direction.
    pub basis: Vec<f32>,
    /// Eigenvalues of the AC covariance, non-increasing, length `dim - 1`.
    pub energies: Vec<f32>,
}

impl SaabKernel {
    /// Fits a kernel from an explicit patch matrix.
    pub fn fit(patches: &DataMatrix) -> Result<SaabKernel> {
        if patches.rows < 2 {
            return Err(Error::invalid("kernel fit needs at least 2 samples".into()));
        }
        let dim = patches.dim;
        let mut sum = vec![0.0f64; dim];
        let mut m2 = vec![0.0f64; dim * dim];
        for r in 0..patches.rows {
            accumulate_moments(patches.row(r), &mut sum, &mut m2);
        }
        Ok(Self::fit_from_moments(patches.rows, dim, &sum, &m2))
    }

    /// Fits from streaming raw moments: `sum = sum(p)`, `m2 = sum(p p^T)`
    /// (upper triangle filled).
    fn fit_from_moments(n: usize, dim: usize, sum: &[f64], m2: &[f64]) -> SaabKernel {
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        // Centered covariance from raw moments.
        let mut cov = vec![0.0f64; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = m2[i * dim + j] / nf - mean[i] * mean[j];
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        // Project out the DC direction: cov_ac = P cov P, P = I - u0 u0^T.
        let inv_sqrt = 1.0 / (dim as f64).sqrt();
        let mut cu = vec![0.0f64; dim]; // cov * u0
        for i in 0..dim {
            cu[i] = (0..dim).map(|j| cov[i * dim + j]).sum::<f64>() * inv_sqrt;
        }
        let ucu: f64 = cu.iter().sum::<f64>() * inv_sqrt;
        let mut cov_ac = cov;
        for i in 0..dim {
            for j in 0..dim {
                cov_ac[i * dim + j] +=
                    ucu * inv_sqrt * inv_sqrt - cu[i] * inv_sqrt - cu[j] * inv_sqrt;
            }
        }

        let (values, vectors) = linalg::sym_eigen_desc(&cov_ac, dim);
        let rank_tol = values.first().copied().unwrap_or(0.0).max(0.0) * 1e-9 + 1e-30;
        let mut rows: Vec<Vec<f64>> = vec![vec![inv_sqrt; dim]];
        let mut energies: Vec<f32> = Vec::with_capacity(dim - 1);
        let mut leftovers: Vec<Vec<f64>> = Vec::new();
        for (lambda, v) in values.iter().zip(vectors) {
            if *lambda > rank_tol && rows.len() < dim {
                rows.push(v);
                energies.push(lambda.max(0.0) as f32);
            } else {
                leftovers.push(v);
            }
        }
        if n < dim + 1 || rows.len() < dim {
            log::warn!(
                "degenerate patch statistics (n={n}, dim={dim}, rank={}); completing basis",
                rows.len() - 1
            );
        }
        linalg::complete_orthonormal(&mut rows, dim, &leftovers);
        energies.resize(dim - 1, 0.0);

        // Store the mean with its DC component removed so the DC coefficient
        // passes the raw patch average through.
        let dc_mean: f64 = mean.iter().sum::<f64>() * inv_sqrt;
        let mean_ac: Vec<f32> =
            mean.iter().map(|m| (m - dc_mean * inv_sqrt) as f32).collect();

        let mut basis = Vec::with_capacity(dim * dim);
        for r in &rows {
            basis.extend(r.iter().map(|x| *x as f32));
        }
        SaabKernel { dim, mean: mean_ac, basis, energies }
    }

    #[inline]
    pub fn forward_patch(&self, patch: &[f32], out: &mut [f32]) {
        debug_assert_eq!(patch.len(), self.dim);
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.basis[k * self.dim..(k + 1) * self.dim];
            let mut acc = 0.0f64;
            for i in 0..self.dim {
                acc += row[i] as f64 * (patch[i] - self.mean[i]) as f64;
            }
            *o = acc as f32;
        }
    }

    #[inline]
    pub fn inverse_patch(&self, coeffs: &[f32], out: &mut [f32]) {
        debug_assert_eq!(coeffs.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.mean[i] as f64;
            for (k, c) in coeffs.iter().enumerate() {
                acc += self.basis[k * self.dim + i] as f64 * *c as f64;
            }
            *o = acc as f32;
        }
    }

    /// Max deviation of `basis basis^T` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d)
                    .map(|k| self.basis[i * d + k] as f64 * self.basis[j * d + k] as f64)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }
}

fn accumulate_moments(patch: &[f32], sum: &mut [f64], m2: &mut [f64]) {
    let dim = patch.len();
    for i in 0..dim {
        let pi = patch[i] as f64;
        sum[i] += pi;
        let base = i * dim;
        for (j, pj) in patch.iter().enumerate().skip(i) {
            m2[base + j] += pi * *pj as f64;
        }
    }
}

/// One cascade stage: a joint kernel over all channels, or one kernel per
/// channel (the channel-wise arrangement used from the second stage on).
#[derive(Debug, Clone, PartialEq)]
pub struct SaabStage {
    pub window: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub channel_wise: bool,
    pub kernels: Vec<SaabKernel>,
}

const WINDOW: usize = 2;

impl SaabStage {
    /// Fits a stage over every patch of every map (position-pooled).
    pub fn fit(maps: &[FeatureMap], channel_wise: bool) -> Result<SaabStage> {
        let first = maps.first().ok_or_else(|| Error::invalid("empty training set".into()))?;
        let c = first.channels;
        if first.width % WINDOW != 0 || first.height % WINDOW != 0 {
            return Err(Error::invalid(format!(
                "stage input {}x{} not divisible by window {}",
                first.width, first.height, WINDOW
            )));
        }
        let kernel_count = if channel_wise { c } else { 1 };
        let dim = if channel_wise { WINDOW * WINDOW } else { WINDOW * WINDOW * c };

        // Accumulate raw moments per kernel in fixed chunk order.
        let chunks: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, usize)> = maps
            .par_chunks(64)
            .map(|chunk| {
                let mut sums = vec![vec![0.0f64; dim]; kernel_count];
                let mut m2s = vec![vec![0.0f64; dim * dim]; kernel_count];
                let mut count = 0usize;
                let mut patch = vec![0.0f32; dim];
                for map in chunk {
                    let (pw, ph) = (map.width / WINDOW, map.height / WINDOW);
                    for py in 0..ph {
                        for px in 0..pw {
                            if channel_wise {
                                for ch in 0..c {
                                    extract_patch(map, px, py, Some(ch), &mut patch);
                                    accumulate_moments(&patch, &mut sums[ch], &mut m2s[ch]);
                                }
                            } else {
                                extract_patch(map, px, py, None, &mut patch);
                                accumulate_moments(&patch, &mut sums[0], &mut m2s[0]);
                            }
                            count += 1;
                        }
                    }
                }
                (sums, m2s, count)
            })
            .collect();

        let mut sums = vec![vec![0.0f64; dim]; kernel_count];
        let mut m2s = vec![vec![0.0f64; dim * dim]; kernel_count];
        let mut count = 0usize;
        for (s, m, n) in chunks {
            for k in 0..kernel_count {
                for (a, b) in sums[k].iter_mut().zip(&s[k]) {
                    *a += *b;
                }
                for (a, b) in m2s[k].iter_mut().zip(&m[k]) {
                    *a += *b;
                }
            }
            count += n;
        }
        if count < 2 {
            return Err(Error::invalid("stage fit needs at least 2 patches".into()));
        }

        let kernels = (0..kernel_count)
            .map(|k| SaabKernel::fit_from_moments(count, dim, &sums[k], &m2s[k]))
            .collect();
        Ok(SaabStage { window: WINDOW, stride: WINDOW, in_channels: c, channel_wise, kernels })
    }

    pub fn out_channels(&self) -> usize {
        self.window * self.window * self.in_channels
    }

    fn check_input(&self, map: &FeatureMap) -> Result<()> {
        if map.channels != self.in_channels {
            return Err(Error::dims(format!(
                "stage expects {} channels, got {}",
                self.in_channels, map.channels
            )));
        }
        if map.width % self.stride != 0 || map.height % self.stride != 0 || map.width == 0 {
            return Err(Error::dims(format!(
                "stage input {}x{} not divisible by stride {}",
                map.width, map.height, self.stride
            )));
        }
        Ok(())
    }

    /// Maps each non-overlapping window to its coefficient vector. Spatial
    /// dims halve; channels become `window^2 * in_channels`. Output channel
    /// order is `in_ch * window^2 + coefficient` for the channel-wise case.
    pub fn forward(&self, map: &FeatureMap) -> Result<FeatureMap> {
        self.check_input(map)?;
        let c = self.in_channels;
        let (ow, oh) = (map.width / self.stride, map.height / self.stride);
        let oc = self.out_channels();
        let mut out = vec![0.0f32; ow * oh * oc];
        let mut patch = vec![0.0f32; self.kernels[0].dim];
        let mut coeffs = vec![0.0f32; self.kernels[0].dim];
        for py in 0..oh {
            for px in 0..ow {
                let base = (py * ow + px) * oc;
                if self.channel_wise {
                    let step = self.window * self.window;
                    for ch in 0..c {
                        extract_patch(map, px, py, Some(ch), &mut patch);
                        self.kernels[ch].forward_patch(&patch, &mut coeffs);
                        out[base + ch * step..base + (ch + 1) * step].copy_from_slice(&coeffs);
                    }
                } else {
                    extract_patch(map, px, py, None, &mut patch);
                    self.kernels[0].forward_patch(&patch, &mut coeffs);
                    out[base..base + oc].copy_from_slice(&coeffs);
                }
            }
        }
        Ok(FeatureMap { width: ow, height: oh, channels: oc, data: out })
    }

    /// Exact inverse of [`SaabStage::forward`] up to float rounding.
    pub fn inverse(&self, map: &FeatureMap) -> Result<FeatureMap> {
        if map.channels != self.out_channels() {
            return Err(Error::dims(format!(
                "stage inverse expects {} channels, got {}",
                self.out_channels(),
                map.channels
            )));
        }
        let c = self.in_channels;
        let (ow, oh) = (map.width * self.stride, map.height * self.stride);
        let mut out = vec![0.0f32; ow * oh * c];
        let dim = self.kernels[0].dim;
        let mut patch = vec![0.0f32; dim];
        for py in 0..map.height {
            for px in 0..map.width {
                let base = (py * map.width + px) * map.channels;
                if self.channel_wise {
                    let step = self.window * self.window;
                    for ch in 0..c {
                        let coeffs = &map.data[base + ch * step..base + (ch + 1) * step];
                        self.kernels[ch].inverse_patch(coeffs, &mut patch);
                        scatter_patch(&patch, px, py, Some(ch), ow, c, &mut out);
                    }
                } else {
                    let coeffs = &map.data[base..base + map.channels];
                    self.kernels[0].inverse_patch(coeffs, &mut patch);
                    scatter_patch(&patch, px, py, None, ow, c, &mut out);
                }
            }
        }
        Ok(FeatureMap { width: ow, height: oh, channels: c, data: out })
    }
}

#[inline]
fn extract_patch(map: &FeatureMap, px: usize, py: usize, channel: Option<usize>, out: &mut [f32]) {
    let c = map.channels;
    let mut k = 0;
    for wy in 0..WINDOW {
        let row = ((py * WINDOW + wy) * map.width + px * WINDOW) * c;
        for wx in 0..WINDOW {
            match channel {
                Some(ch) => {
                    out[k] = map.data[row + wx * c + ch];
                    k += 1;
                }
                None => {
                    for ch in 0..c {
                        out[k] = map.data[row + wx * c + ch];
                        k += 1;
                    }
                }
            }
        }
    }
}

#[inline]
fn scatter_patch(
    patch: &[f32],
    px: usize,
    py: usize,
    channel: Option<usize>,
    width: usize,
    channels: usize,
    out: &mut [f32],
) {
    let mut k = 0;
    for wy in 0..WINDOW {
        let row = ((py * WINDOW + wy) * width + px * WINDOW) * channels;
        for wx in 0..WINDOW {
            match channel {
                Some(ch) => {
                    out[row + wx * channels + ch] = patch[k];
                    k += 1;
                }
                None => {
                    for ch in 0..channels {
                        out[row + wx * channels + ch] = patch[k];
                        k += 1;
                    }
                }
            }
        }
    }
}

/// Ordered Saab stages mapping a `2^d`-sided raster to a feature vector of
/// the same total dimension and back.
#[derive(Debug, Clone, PartialEq)]
pub struct SaabCascade {
    pub input_width: usize,
    pub input_height: usize,
    pub input_channels: usize,
    pub stages: Vec<SaabStage>,
}

impl SaabCascade {
    pub fn output_dim(&self) -> usize {
        self.input_width * self.input_height * self.input_channels
    }

    /// Fits `num_stages` cascaded stages on square images of side
    /// `2^num_stages`. The first stage is joint over the input channels,
    /// later stages are channel-wise.
    pub fn fit(images: &[ImageTensor], num_stages: usize) -> Result<SaabCascade> {
        let maps: Vec<FeatureMap> = images.iter().map(FeatureMap::from_image).collect();
        Self::fit_maps(maps, num_stages)
    }

    /// Same as [`SaabCascade::fit`] but over unbounded rasters (detail
    /// planes are fitted through this path).
    pub fn fit_residuals(residuals: &[ResidualTensor], num_stages: usize) -> Result<SaabCascade> {
        let maps: Vec<FeatureMap> = residuals.iter().map(FeatureMap::from_residual).collect();
        Self::fit_maps(maps, num_stages)
    }

    fn fit_maps(mut maps: Vec<FeatureMap>, num_stages: usize) -> Result<SaabCascade> {
        let first = maps.first().ok_or_else(|| Error::invalid("empty training set".into()))?;
        let (w, h, c) = (first.width, first.height, first.channels);
        if num_stages == 0 {
            return Err(Error::invalid("cascade needs at least one stage".into()));
        }
        if w != h || w != 1 << num_stages {
            return Err(Error::invalid(format!(
                "cascade expects square side {} for {} stages, got {}x{}",
                1 << num_stages,
                num_stages,
                w,
                h
            )));
        }
        if maps.iter().any(|m| m.width != w || m.height != h || m.channels != c) {
            return Err(Error::dims("training images must share dimensions".into()));
        }
        let mut stages = Vec::with_capacity(num_stages);
        for s in 0..num_stages {
            let stage = SaabStage::fit(&maps, s > 0)?;
            maps = maps
                .into_par_iter()
                .map(|m| stage.forward(&m).expect("fit-produced map must be transformable"))
                .collect();
            stages.push(stage);
        }
        Ok(SaabCascade { input_width: w, input_height: h, input_channels: c, stages })
    }

    fn forward_map(&self, mut map: FeatureMap) -> Result<Vec<f32>> {
        if map.width != self.input_width
            || map.height != self.input_height
            || map.channels != self.input_channels
        {
            return Err(Error::dims(format!(
                "cascade expects {}x{}x{}, got {}x{}x{}",
                self.input_width,
                self.input_height,
                self.input_channels,
                map.width,
                map.height,
                map.channels
            )));
        }
        for stage in &self.stages {
            map = stage.forward(&map)?;
        }
        debug_assert_eq!(map.width * map.height, 1);
        // 1x1 spatial remains, so the flattened vector is the channel vector.
        Ok(map.data)
    }

    /// Full cascade: image to core vector of length `output_dim()`.
    pub fn forward(&self, img: &ImageTensor) -> Result<Vec<f32>> {
        self.forward_map(FeatureMap::from_image(img))
    }

    /// Full cascade over a residual raster.
    pub fn forward_residual(&self, res: &ResidualTensor) -> Result<Vec<f32>> {
        self.forward_map(FeatureMap::from_residual(res))
    }

    /// Exact inverse of [`SaabCascade::forward`] up to float rounding. The
    /// output is not clipped; callers clamp when the result is an image.
    pub fn inverse(&self, x: &[f32]) -> Result<ResidualTensor> {
        if x.len() != self.output_dim() {
            return Err(Error::dims(format!(
                "core vector length {} != cascade dimension {}",
                x.len(),
                self.output_dim()
            )));
        }
        let mut map = FeatureMap { width: 1, height: 1, channels: x.len(), data: x.to_vec() };
        for stage in self.stages.iter().rev() {
            map = stage.inverse(&map)?;
        }
        Ok(map.into_residual())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::splitmix64;

    fn pseudo_random_image(side: usize, channels: usize, seed: u64) -> ImageTensor {
        let mut s = seed;
        let mut data = Vec::with_capacity(side * side * channels);
        for _ in 0..side * side * channels {
            s = splitmix64(s);
            data.push((s % 10_000) as f32 / 9_999.0);
        }
        ImageTensor::from_raw(side, side, channels, data)
    }

    #[test]
    fn constant_patches_pass_dc_through() {
        let v = 0.37f32;
        let rows: Vec<Vec<f32>> = (0..16).map(|_| vec![v; 4]).collect();
        let kernel = SaabKernel::fit(&DataMatrix::from_rows(&rows).unwrap()).unwrap();
        assert!(kernel.energies.iter().all(|e| e.abs() < 1e-9));
        let mut coeffs = vec![0.0f32; 4];
        kernel.forward_patch(&vec![v; 4], &mut coeffs);
        assert!((coeffs[0] - v * 2.0).abs() < 1e-6, "dc coefficient {}", coeffs[0]);
        assert!(coeffs[1..].iter().all(|c| c.abs() < 1e-6));
    }

    #[test]
    fn antipodal_pair_yields_direction_as_first_ac_row() {
        // Zero-sum v keeps the direction inside the AC subspace.
        let v = [0.5f32, -0.5, 0.25, -0.25];
        let norm = (v.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
        let rows = vec![v.to_vec(), v.iter().map(|x| -x).collect()];
        let kernel = SaabKernel::fit(&DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let row1 = &kernel.basis[4..8];
        for (a, b) in row1.iter().zip(&v) {
            let want = *b as f64 / norm;
            assert!((*a as f64 - want).abs() < 1e-6 || (*a as f64 + want).abs() < 1e-6);
        }
        // Sign convention: largest-magnitude entry positive.
        let max = row1.iter().cloned().fold(0.0f32, |m, x| if x.abs() > m.abs() { x } else { m });
        assert!(max > 0.0);
    }

    #[test]
    fn basis_diagonalizes_ac_covariance() {
        let dim = 12;
        let mut s = 5u64;
        let rows: Vec<Vec<f32>> = (0..1000)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        s = splitmix64(s);
                        // Sum of uniforms approximates a Gaussian well enough here.
                        let mut acc = 0.0f32;
                        for _ in 0..4 {
                            s = splitmix64(s);
                            acc += (s % 1000) as f32 / 999.0 - 0.5;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let kernel = SaabKernel::fit(&data).unwrap();

        // Oracle: covariance of DC-removed, mean-removed residuals.
        let inv_sqrt = 1.0 / (dim as f64).sqrt();
        let residuals: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let dc: f64 = r.iter().map(|x| *x as f64).sum::<f64>() * inv_sqrt;
                r.iter().map(|x| *x as f64 - dc * inv_sqrt).collect()
            })
            .collect();
        let mut mean = vec![0.0f64; dim];
        for r in &residuals {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= residuals.len() as f64;
        }
        let mut cov = vec![0.0f64; dim * dim];
        for r in &residuals {
            for i in 0..dim {
                for j in 0..dim {
                    cov[i * dim + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        for v in &mut cov {
            *v /= residuals.len() as f64;
        }

        // B cov_ac B^T must be diagonal.
        let b = |i: usize, j: usize| kernel.basis[i * dim + j] as f64;
        let mut lambda_max = 0.0f64;
        let mut worst_off = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for p in 0..dim {
                    for q in 0..dim {
                        acc += b(i, p) * cov[p * dim + q] * b(j, q);
                    }
                }
                if i == j {
                    lambda_max = lambda_max.max(acc);
                } else {
                    worst_off = worst_off.max(acc.abs());
                }
            }
        }
        assert!(worst_off <= 1e-4 * lambda_max, "off {worst_off} vs lambda {lambda_max}");
    }

    #[test]
    fn kernel_is_orthonormal_even_on_degenerate_data() {
        let rows: Vec<Vec<f32>> = (0..8).map(|_| vec![0.1, 0.2, 0.3, 0.4]).collect();
        let kernel = SaabKernel::fit(&DataMatrix::from_rows(&rows).unwrap()).unwrap();
        assert!(kernel.orthonormality_error() < 1e-5);
    }

    #[test]
    fn stage_forward_constant_image_gives_identical_patches() {
        let img = pseudo_random_image(4, 1, 1);
        let maps = vec![FeatureMap::from_image(&img)];
        let stage = SaabStage::fit(&maps, false).unwrap();
        let constant = FeatureMap::from_image(&ImageTensor::constant(4, 4, 1, 0.6));
        let out = stage.forward(&constant).unwrap();
        let first = out.data[..out.channels].to_vec();
        for p in 1..out.width * out.height {
            assert_eq!(&out.data[p * out.channels..(p + 1) * out.channels], &first[..]);
        }
    }

    #[test]
    fn stage_roundtrip_and_isometry() {
        let train: Vec<FeatureMap> = (0..8)
            .map(|i| FeatureMap::from_image(&pseudo_random_image(8, 3, i)))
            .collect();
        let stage = SaabStage::fit(&train, false).unwrap();
        let img = pseudo_random_image(8, 3, 99);
        let map = FeatureMap::from_image(&img);
        let coeffs = stage.forward(&map).unwrap();
        let back = stage.inverse(&coeffs).unwrap();
        for (a, b) in back.data.iter().zip(&map.data) {
            assert!((a - b).abs() < 1e-5);
        }
        // Parseval per patch: coefficient norm equals centered patch norm.
        let kernel = &stage.kernels[0];
        let mut patch = vec![0.0f32; kernel.dim];
        extract_patch(&map, 1, 1, None, &mut patch);
        let mut c = vec![0.0f32; kernel.dim];
        kernel.forward_patch(&patch, &mut c);
        let pn: f64 = patch
            .iter()
            .zip(&kernel.mean)
            .map(|(p, m)| ((p - m) as f64).powi(2))
            .sum();
        let cn: f64 = c.iter().map(|x| (*x as f64).powi(2)).sum();
        assert!((pn - cn).abs() <= 1e-4 * pn.max(1e-12), "{pn} vs {cn}");
    }

    #[test]
    fn inverse_of_zero_coefficients_is_stage_mean() {
        let train: Vec<FeatureMap> = (0..8)
            .map(|i| FeatureMap::from_image(&pseudo_random_image(4, 1, i + 10)))
            .collect();
        let stage = SaabStage::fit(&train, false).unwrap();
        let zeros = FeatureMap { width: 1, height: 1, channels: 4, data: vec![0.0; 4] };
        let back = stage.inverse(&zeros).unwrap();
        for (i, v) in back.data.iter().enumerate() {
            assert!((v - stage.kernels[0].mean[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn cascade_dimension_and_roundtrip() {
        let train: Vec<ImageTensor> = (0..16).map(|i| pseudo_random_image(4, 3, i)).collect();
        let cascade = SaabCascade::fit(&train, 2).unwrap();
        assert_eq!(cascade.output_dim(), 48);
        for i in 0..64u64 {
            let img = pseudo_random_image(4, 3, 1000 + i);
            let x = cascade.forward(&img).unwrap();
            assert_eq!(x.len(), 48);
            let back = cascade.inverse(&x).unwrap();
            for (a, b) in back.data.iter().zip(&img.data) {
                assert!((a - b).abs() <= 1e-4, "roundtrip error {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn cascade_isometry_between_images() {
        let train: Vec<ImageTensor> = (0..16).map(|i| pseudo_random_image(8, 1, i)).collect();
        let cascade = SaabCascade::fit(&train, 3).unwrap();
        let a = pseudo_random_image(8, 1, 500);
        let b = pseudo_random_image(8, 1, 501);
        let xa = cascade.forward(&a).unwrap();
        let xb = cascade.forward(&b).unwrap();
        let feat: f64 = xa.iter().zip(&xb).map(|(p, q)| ((p - q) as f64).powi(2)).sum();
        let pix: f64 = a.data.iter().zip(&b.data).map(|(p, q)| ((p - q) as f64).powi(2)).sum();
        assert!((feat.sqrt() - pix.sqrt()).abs() <= 1e-3 * pix.sqrt());
    }

    #[test]
    fn constant_images_differ_only_in_dc_coordinates() {
        let train: Vec<ImageTensor> = (0..16).map(|i| pseudo_random_image(4, 1, i)).collect();
        let cascade = SaabCascade::fit(&train, 2).unwrap();
        let x0 = cascade.forward(&ImageTensor::constant(4, 4, 1, 0.0)).unwrap();
        let x1 = cascade.forward(&ImageTensor::constant(4, 4, 1, 0.8)).unwrap();
        let differing: Vec<usize> = (0..x0.len())
            .filter(|&i| (x0[i] - x1[i]).abs() > 1e-5)
            .collect();
        // The DC chain is a single coordinate after the full cascade.
        assert_eq!(differing.len(), 1, "dc chain coords: {differing:?}");
    }

    #[test]
    fn cascade_rejects_wrong_inputs() {
        let train: Vec<ImageTensor> = (0..4).map(|i| pseudo_random_image(4, 1, i)).collect();
        let cascade = SaabCascade::fit(&train, 2).unwrap();
        assert!(cascade.forward(&pseudo_random_image(8, 1, 0)).is_err());
        assert!(cascade.inverse(&[0.0; 7]).is_err());
        assert!(SaabCascade::fit(&train, 3).is_err());
        assert!(SaabCascade::fit(&[], 2).is_err());
    }

    #[test]
    fn fitting_is_deterministic() {
        let train: Vec<ImageTensor> = (0..8).map(|i| pseudo_random_image(8, 3, i)).collect();
        let a = SaabCascade::fit(&train, 3).unwrap();
        let b = SaabCascade::fit(&train, 3).unwrap();
        assert_eq!(a, b);
    }
}
