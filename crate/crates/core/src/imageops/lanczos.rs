//! Separable Lanczos-3 upsampling.

use super::ImageTensor;
use crate::error::{Error, Result};

const WINDOW: f64 = 3.0;

/// Windowed sinc, `sinc(t) * sinc(t/3)` for `|t| < 3`.
fn lanczos3(t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.abs() >= WINDOW {
        return 0.0;
    }
    let pt = std::f64::consts::PI * t;
    (pt.sin() / pt) * ((pt / WINDOW).sin() / (pt / WINDOW))
}

/// Tap indices (clamped to the source range) and normalized weights for one
/// output position along an axis.
struct Taps {
    start: i64,
    weights: Vec<f64>,
}

fn axis_taps(in_len: usize, factor: usize) -> Vec<Taps> {
    let out_len = in_len * factor;
    let mut taps = Vec::with_capacity(out_len);
    for o in 0..out_len {
        // Center alignment: output sample o sits at (o + 0.5)/factor - 0.5
        // in source coordinates.
        let center = (o as f64 + 0.5) / factor as f64 - 0.5;
        let start = center.floor() as i64 - WINDOW as i64 + 1;
        let mut weights = Vec::with_capacity(2 * WINDOW as usize);
        let mut sum = 0.0;
        for i in 0..2 * WINDOW as i64 {
            let w = lanczos3(center - (start + i) as f64);
            sum += w;
            weights.push(w);
        }
        // Normalizing keeps constants constant and compensates edge clamping.
        for w in &mut weights {
            *w /= sum;
        }
        taps.push(Taps { start, weights });
    }
    taps
}

#[inline]
fn clamp_idx(i: i64, len: usize) -> usize {
    i.clamp(0, len as i64 - 1) as usize
}

/// Upsamples by an integer power-of-two factor with a separable Lanczos-3
/// kernel (rows, then columns). Samples outside the source are edge-clamped
/// and the output is clipped to `[0,1]`.
pub fn lanczos_upsample(img: &ImageTensor, factor: usize) -> Result<ImageTensor> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::invalid("cannot upsample a zero-sized image".into()));
    }
    if factor < 2 || !factor.is_power_of_two() {
        return Err(Error::invalid(format!("upsample factor {factor} must be a power of two >= 2")));
    }
    let (w, h, c) = (img.width, img.height, img.channels);
    let (ow, oh) = (w * factor, h * factor);

    // Horizontal pass: w x h -> ow x h.
    let xtaps = axis_taps(w, factor);
    let mut mid = vec![0.0f64; ow * h * c];
    for y in 0..h {
        for (ox, t) in xtaps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, wt) in t.weights.iter().enumerate() {
                    let sx = clamp_idx(t.start + i as i64, w);
                    acc += wt * img.at(sx, y, ch) as f64;
                }
                mid[(y * ow + ox) * c + ch] = acc;
            }
        }
    }

    // Vertical pass: ow x h -> ow x oh.
    let ytaps = axis_taps(h, factor);
    let mut out = vec![0.0f32; ow * oh * c];
    for (oy, t) in ytaps.iter().enumerate() {
        for ox in 0..ow {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, wt) in t.weights.iter().enumerate() {
                    let sy = clamp_idx(t.start + i as i64, h);
                    acc += wt * mid[(sy * ow + ox) * c + ch];
                }
                out[(oy * ow + ox) * c + ch] = acc.clamp(0.0, 1.0) as f32;
            }
        }
    }
    Ok(ImageTensor::from_raw(ow, oh, c, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: dense application of the normalized 1-D weight
    /// matrices, columns first, without the separable fast path.
    fn dense_oracle(img: &ImageTensor, factor: usize) -> Vec<f64> {
        let (w, h) = (img.width, img.height);
        let build = |len: usize| -> Vec<Vec<f64>> {
            let out_len = len * factor;
            let mut m = vec![vec![0.0; len]; out_len];
            for (o, row) in m.iter_mut().enumerate() {
                let center = (o as f64 + 0.5) / factor as f64 - 0.5;
                let start = center.floor() as i64 - 2;
                let mut raw = Vec::new();
                let mut sum = 0.0;
                for i in 0..6 {
                    let t = center - (start + i) as f64;
                    let v = if t == 0.0 {
                        1.0
                    } else if t.abs() >= 3.0 {
                        0.0
                    } else {
                        let pt = std::f64::consts::PI * t;
                        (pt.sin() / pt) * ((pt / 3.0).sin() / (pt / 3.0))
                    };
                    sum += v;
                    raw.push(v);
                }
                for (i, v) in raw.iter().enumerate() {
                    let idx = (start + i as i64).clamp(0, len as i64 - 1) as usize;
                    row[idx] += v / sum;
                }
            }
            m
        };
        let wx = build(w);
        let wy = build(h);
        let mut out = vec![0.0; w * factor * h * factor];
        for oy in 0..h * factor {
            for ox in 0..w * factor {
                let mut acc = 0.0;
                for sy in 0..h {
                    for sx in 0..w {
                        acc += wy[oy][sy] * wx[ox][sx] * img.at(sx, sy, 0) as f64;
                    }
                }
                out[oy * w * factor + ox] = acc.clamp(0.0, 1.0);
            }
        }
        out
    }

    #[test]
    fn constant_is_reproduced() {
        let img = ImageTensor::constant(4, 4, 1, 0.5);
        let up = lanczos_upsample(&img, 2).unwrap();
        assert_eq!((up.width, up.height), (8, 8));
        for v in &up.data {
            assert!((v - 0.5).abs() <= 1e-6, "constant drifted to {v}");
        }
    }

    #[test]
    fn single_pixel_expands_to_its_value() {
        let img = ImageTensor::constant(1, 1, 1, 0.625);
        let up = lanczos_upsample(&img, 2).unwrap();
        assert_eq!((up.width, up.height), (2, 2));
        for v in &up.data {
            assert!((v - 0.625).abs() <= 1e-6);
        }
    }

    #[test]
    fn impulse_matches_dense_oracle() {
        let mut img = ImageTensor::constant(8, 8, 1, 0.0);
        img.set(4, 3, 0, 1.0);
        let up = lanczos_upsample(&img, 2).unwrap();
        let oracle = dense_oracle(&img, 2);
        assert_eq!((up.width, up.height), (16, 16));
        for (got, want) in up.data.iter().zip(&oracle) {
            assert!((*got as f64 - want).abs() <= 1e-6, "got {got}, want {want}");
        }
    }

    #[test]
    fn factor_four_matches_dense_oracle() {
        let mut img = ImageTensor::constant(4, 4, 1, 0.25);
        img.set(1, 2, 0, 0.9);
        img.set(3, 0, 0, 0.05);
        let up = lanczos_upsample(&img, 4).unwrap();
        let oracle = dense_oracle(&img, 4);
        for (got, want) in up.data.iter().zip(&oracle) {
            assert!((*got as f64 - want).abs() <= 1e-6);
        }
    }

    #[test]
    fn rejects_zero_size_and_bad_factor() {
        let img = ImageTensor::from_raw(0, 0, 1, vec![]);
        assert!(lanczos_upsample(&img, 2).is_err());
        let img = ImageTensor::constant(2, 2, 1, 0.5);
        assert!(lanczos_upsample(&img, 3).is_err());
        assert!(lanczos_upsample(&img, 1).is_err());
    }
}
