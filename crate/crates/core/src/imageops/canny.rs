//! Canny edge masking with binary dilation.

use super::{EdgeMask, ImageTensor};
use crate::error::{Error, Result};

/// Edge detector configuration. Thresholds apply to the raw Sobel gradient
/// magnitude of the `[0,1]` luma plane.
#[derive(Debug, Clone, PartialEq)]
pub struct CannyParams {
    pub low: f32,
    pub high: f32,
    pub sigma: f32,
    pub dilate_radius: usize,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self { low: 0.1, high: 0.25, sigma: 1.0, dilate_radius: 1 }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|j| (-(j as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for w in &mut k {
        *w /= sum;
    }
    k
}

#[inline]
fn clamp(i: i64, len: usize) -> usize {
    i.clamp(0, len as i64 - 1) as usize
}

fn blur(luma: &[f32], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as i64;
    let mut mid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in k.iter().enumerate() {
                acc += wt * luma[y * w + clamp(x as i64 + i as i64 - radius, w)] as f64;
            }
            mid[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in k.iter().enumerate() {
                acc += wt * mid[clamp(y as i64 + i as i64 - radius, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Standard Canny (Gaussian blur, Sobel, non-maximum suppression,
/// double-threshold hysteresis) followed by binary Chebyshev dilation.
/// The mask is 1 on and near edges, 0 on smooth regions; color input is
/// reduced to luma first.
pub fn canny_mask(img: &ImageTensor, params: &CannyParams) -> Result<EdgeMask> {
    if !(0.0 <= params.low && params.low < params.high && params.high <= 1.0) {
        return Err(Error::invalid(format!(
            "canny thresholds must satisfy 0 <= low < high <= 1, got {} / {}",
            params.low, params.high
        )));
    }
    let (w, h) = (img.width, img.height);
    if w == 0 || h == 0 {
        return Ok(EdgeMask::zeros(w, h));
    }
    let smooth = blur(&img.luma(), w, h, params.sigma as f64);

    // Sobel gradients with edge-clamped sampling.
    let at = |x: i64, y: i64| smooth[clamp(y, h) * w + clamp(x, w)];
    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect();

    // Non-maximum suppression over the interior. The gradient direction is
    // quantized into four sectors by slope comparison (no trig). On exact
    // plateaus the pixel on the positive side of the gradient survives.
    const TAN22: f64 = 0.41421356237309503; // tan(22.5 deg)
    let mut thin = vec![0.0f64; w * h];
    if w >= 3 && h >= 3 {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let i = y * w + x;
                let m = mag[i];
                if m == 0.0 {
                    continue;
                }
                let (ax, ay) = (gx[i].abs(), gy[i].abs());
                let (neg, pos) = if ay <= TAN22 * ax {
                    (mag[i - 1], mag[i + 1])
                } else if ax <= TAN22 * ay {
                    (mag[i - w], mag[i + w])
                } else if (gx[i] > 0.0) == (gy[i] > 0.0) {
                    (mag[i - w - 1], mag[i + w + 1])
                } else {
                    (mag[i - w + 1], mag[i + w - 1])
                };
                if m >= neg && m > pos {
                    thin[i] = m;
                }
            }
        }
    }

    // Hysteresis: grow from strong pixels through weak neighbors.
    let low = params.low as f64;
    let high = params.high as f64;
    let mut edge = vec![false; w * h];
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if thin[i] >= high && !edge[i] {
                edge[i] = true;
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                continue;
                            }
                            let ni = ny as usize * w + nx as usize;
                            if !edge[ni] && thin[ni] >= low {
                                edge[ni] = true;
                                stack.push((nx as usize, ny as usize));
                            }
                        }
                    }
                }
            }
        }
    }

    // Binary dilation with a Chebyshev ball.
    let r = params.dilate_radius as i64;
    let mut values = vec![0.0f32; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            'search: for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0
                        && ny >= 0
                        && nx < w as i64
                        && ny < h as i64
                        && edge[ny as usize * w + nx as usize]
                    {
                        values[y as usize * w + x as usize] = 1.0;
                        break 'search;
                    }
                }
            }
        }
    }
    Ok(EdgeMask { width: w, height: h, values })
}
