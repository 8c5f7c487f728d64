//! Deterministic raster primitives shared by every pipeline stage.
//!
//! All operations here are pure functions of their inputs and safe to call
//! concurrently. Images hold f32 samples in `[0,1]`; residuals share the
//! layout but are unbounded.

mod canny;
mod lanczos;

pub use canny::{canny_mask, CannyParams};
pub use lanczos::lanczos_upsample;

use crate::error::{Error, Result};

/// Planar raster: `width x height x channels` f32 samples in `[0,1]`,
/// row-major with interleaved channels (`idx = (y*width + x)*channels + ch`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Raster with the same layout as [`ImageTensor`] but unbounded samples,
/// used for detail/residual planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTensor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Binary per-pixel mask with values in `{0,1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl ImageTensor {
    /// Validates length, finiteness and range.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::dims(format!(
                "image data length {} != {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if !(channels == 1 || channels == 3) {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid("image samples must be finite and in [0,1]".into()));
        }
        Ok(Self { width, height, channels, data })
    }

    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self { width, height, channels, data }
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::from_raw(width, height, channels, vec![value; width * height * channels])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, ch: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + ch]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, ch: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + ch] = v;
    }

    /// Luma plane (`0.299 R + 0.587 G + 0.114 B`); identity for grayscale.
    pub fn luma(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.width * self.height);
        if self.channels == 1 {
            out.extend_from_slice(&self.data);
        } else {
            for px in self.data.chunks_exact(self.channels) {
                out.push(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]);
            }
        }
        out
    }

    pub fn into_residual(self) -> ResidualTensor {
        ResidualTensor {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data,
        }
    }

    pub(crate) fn window(&self, x0: usize, y0: usize, w: usize, h: usize) -> ImageTensor {
        ImageTensor::from_raw(w, h, self.channels, copy_window(
            &self.data, self.width, self.channels, x0, y0, w, h,
        ))
    }
}

impl ResidualTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::dims(format!(
                "residual data length {} != {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("residual samples must be finite".into()));
        }
        Ok(Self { width, height, channels, data })
    }

    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self { width, height, channels, data }
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::from_raw(width, height, channels, vec![0.0; width * height * channels])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, ch: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + ch]
    }

    pub(crate) fn window(&self, x0: usize, y0: usize, w: usize, h: usize) -> ResidualTensor {
        ResidualTensor::from_raw(w, h, self.channels, copy_window(
            &self.data, self.width, self.channels, x0, y0, w, h,
        ))
    }
}

impl EdgeMask {
    pub(crate) fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, values: vec![0.0; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Fraction of pixels set.
    pub fn coverage(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| *v as f64).sum::<f64>() / self.values.len() as f64
    }
}

fn copy_window(
    data: &[f32],
    width: usize,
    channels: usize,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Vec<f32> {
    let mut out = Vec::with_capacity(w * h * channels);
    for y in 0..h {
        let start = ((y0 + y) * width + x0) * channels;
        out.extend_from_slice(&data[start..start + w * channels]);
    }
    out
}

/// Per-sample clamp of a residual into `[0,1]`. Idempotent.
pub fn clip_unit(img: &ResidualTensor) -> ImageTensor {
    ImageTensor::from_raw(
        img.width,
        img.height,
        img.channels,
        img.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

/// Mean-pools `factor x factor` blocks. Width and height must divide evenly.
pub fn box_downsample(img: &ImageTensor, factor: usize) -> Result<ImageTensor> {
    if factor < 2 {
        return Err(Error::invalid("downsample factor must be >= 2".into()));
    }
    if img.width % factor != 0 || img.height % factor != 0 {
        return Err(Error::invalid(format!(
            "dimensions {}x{} not divisible by factor {}",
            img.width, img.height, factor
        )));
    }
    let (ow, oh, c) = (img.width / factor, img.height / factor, img.channels);
    let norm = 1.0 / (factor * factor) as f64;
    let mut out = vec![0.0f32; ow * oh * c];
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut acc = 0.0f64;
                for dy in 0..factor {
                    for dx in 0..factor {
                        acc += img.at(ox * factor + dx, oy * factor + dy, ch) as f64;
                    }
                }
                out[(oy * ow + ox) * c + ch] = (acc * norm) as f32;
            }
        }
    }
    Ok(ImageTensor::from_raw(ow, oh, c, out))
}

/// Splits an even-dimension image into (TL, TR, BL, BR) quadrants.
pub fn quad_split(img: &ImageTensor) -> Result<[ImageTensor; 4]> {
    if img.width % 2 != 0 || img.height % 2 != 0 || img.width == 0 || img.height == 0 {
        return Err(Error::invalid(format!(
            "quad_split requires even nonzero dims, got {}x{}",
            img.width, img.height
        )));
    }
    let (hw, hh) = (img.width / 2, img.height / 2);
    Ok([
        img.window(0, 0, hw, hh),
        img.window(hw, 0, hw, hh),
        img.window(0, hh, hw, hh),
        img.window(hw, hh, hw, hh),
    ])
}

/// Exact inverse of [`quad_split`].
pub fn quad_join(
    tl: &ImageTensor,
    tr: &ImageTensor,
    bl: &ImageTensor,
    br: &ImageTensor,
) -> Result<ImageTensor> {
    let (w, h, c) = (tl.width, tl.height, tl.channels);
    for q in [tr, bl, br] {
        if q.width != w || q.height != h || q.channels != c {
            return Err(Error::dims("quadrant dimensions differ".into()));
        }
    }
    let mut out = ImageTensor::from_raw(w * 2, h * 2, c, vec![0.0; w * 2 * h * 2 * c]);
    for (q, (x0, y0)) in [tl, tr, bl, br].iter().zip([(0, 0), (w, 0), (0, h), (w, h)]) {
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    out.set(x0 + x, y0 + y, ch, q.at(x, y, ch));
                }
            }
        }
    }
    Ok(out)
}

/// Centers the image on a `target_w x target_h` canvas filled with `fill`.
pub fn pad_center(
    img: &ImageTensor,
    target_w: usize,
    target_h: usize,
    fill: f32,
) -> Result<ImageTensor> {
    if target_w < img.width || target_h < img.height {
        return Err(Error::invalid(format!(
            "pad target {}x{} smaller than source {}x{}",
            target_w, target_h, img.width, img.height
        )));
    }
    let (x0, y0) = ((target_w - img.width) / 2, (target_h - img.height) / 2);
    let c = img.channels;
    let mut out = ImageTensor::from_raw(target_w, target_h, c, vec![fill; target_w * target_h * c]);
    for y in 0..img.height {
        for x in 0..img.width {
            for ch in 0..c {
                out.set(x0 + x, y0 + y, ch, img.at(x, y, ch));
            }
        }
    }
    Ok(out)
}

/// Extracts the centered `crop_w x crop_h` region; exact inverse of
/// [`pad_center`] on the padded area.
pub fn crop_center(img: &ImageTensor, crop_w: usize, crop_h: usize) -> Result<ImageTensor> {
    if crop_w > img.width || crop_h > img.height {
        return Err(Error::invalid(format!(
            "crop {}x{} larger than source {}x{}",
            crop_w, crop_h, img.width, img.height
        )));
    }
    let (x0, y0) = ((img.width - crop_w) / 2, (img.height - crop_h) / 2);
    Ok(img.window(x0, y0, crop_w, crop_h))
}
