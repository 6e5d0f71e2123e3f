//! Depth maps as stylization-strength masks.
//!
//! Raw depth comes from an external monocular estimator as relative values
//! (larger = farther). It is min-max rescaled to `[0, 1]` so that 0 is the
//! nearest pixel and 1 the farthest, optionally re-windowed with
//! `dmin`/`dmax` and inverted, then resampled to feature resolution.

use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::nn::layers::reflect_index;

/// Unnormalized depth samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDepth {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl RawDepth {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("depth map must be at least 1x1"));
        }
        if values.len() != height * width {
            return Err(Error::invalid(format!(
                "depth map {height}x{width} needs {} samples, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("depth map contains non-finite samples"));
        }
        Ok(Self { height, width, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-pixel stylization weight; every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMask {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl DepthMask {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("mask must be at least 1x1"));
        }
        if values.len() != height * width {
            return Err(Error::invalid(format!(
                "mask {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, values })
    }

    /// # Panics
    /// If `value` is outside `[0, 1]` or a dimension is zero.
    pub fn constant(height: usize, width: usize, value: f32) -> Self {
        Self::new(height, width, vec![value; height * width]).expect("valid constant mask")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.width + j]
    }

    /// Multiplies every value by `alpha` in `[0, 1]`.
    pub fn scaled(&self, alpha: f32) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| alpha * v).collect(),
        })
    }

    /// Reflect-pads right and bottom to `height x width`, using the same
    /// edge-exclusive rule as image padding.
    pub fn pad_reflect(&self, height: usize, width: usize) -> Result<Self> {
        if height < self.height || width < self.width {
            return Err(Error::invalid("pad target smaller than mask"));
        }
        if (height > self.height && self.height < 2) || (width > self.width && self.width < 2) {
            return Err(Error::invalid(format!("cannot reflect-pad a {}x{} mask", self.height, self.width)));
        }
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            let si = if i < self.height { i } else { reflect_index(i as isize, self.height) };
            for j in 0..width {
                let sj = if j < self.width { j } else { reflect_index(j as isize, self.width) };
                values.push(self.get(si, sj));
            }
        }
        Ok(Self { height, width, values })
    }
}

/// Window and orientation applied to a normalized depth mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthControls {
    dmin: f64,
    dmax: f64,
    invert: bool,
}

impl Default for DepthControls {
    fn default() -> Self {
        Self { dmin: 0.0, dmax: 1.0, invert: false }
    }
}

impl DepthControls {
    pub fn new(dmin: f64, dmax: f64, invert: bool) -> Result<Self> {
        if !dmin.is_finite() || !dmax.is_finite() || dmin >= dmax {
            return Err(Error::invalid(format!(
                "depth window needs finite dmin < dmax, got [{dmin}, {dmax}]"
            )));
        }
        Ok(Self { dmin, dmax, invert })
    }

    pub fn dmin(&self) -> f64 {
        self.dmin
    }

    pub fn dmax(&self) -> f64 {
        self.dmax
    }

    pub fn invert(&self) -> bool {
        self.invert
    }
}

/// `(raw - min) / (max - min)`. A constant map has no range and yields
/// [`Error::DegenerateDepth`].
pub fn normalize_depth(raw: &RawDepth) -> Result<DepthMask> {
    let (lo, hi) =
        raw.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Err(Error::DegenerateDepth(lo));
    }
    let range = hi - lo;
    let values = raw.values.iter().map(|&v| ((v - lo) / range) as f32).collect();
    Ok(DepthMask { height: raw.height, width: raw.width, values })
}

/// `clamp((v - dmin) / (dmax - dmin), 0, 1)`, then `1 - v` if inverted.
pub fn shape_mask(mask: &DepthMask, controls: &DepthControls) -> DepthMask {
    let span = controls.dmax - controls.dmin;
    let values = mask
        .values
        .iter()
        .map(|&v| {
            let t = ((v as f64 - controls.dmin) / span).clamp(0.0, 1.0);
            (if controls.invert { 1.0 - t } else { t }) as f32
        })
        .collect();
    DepthMask { height: mask.height, width: mask.width, values }
}

/// Corner-aligned source coordinates: output index `k` of `n_out` samples the
/// input at `k * (n_in - 1) / (n_out - 1)`.
fn sample_axis(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    (0..n_out)
        .map(|k| {
            if n_in == 1 || n_out == 1 {
                return (0, 0, 0.0);
            }
            let pos = (k * (n_in - 1)) as f64 / (n_out - 1) as f64;
            let i0 = (pos.floor() as usize).min(n_in - 1);
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

/// Bilinear resampling with corner alignment.
pub fn resample_to(mask: &DepthMask, height: usize, width: usize) -> Result<DepthMask> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!("cannot resample mask to {height}x{width}")));
    }
    if (height, width) == (mask.height, mask.width) {
        return Ok(mask.clone());
    }
    let rows = sample_axis(mask.height, height);
    let cols = sample_axis(mask.width, width);
    let mut values = Vec::with_capacity(height * width);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = mask.get(r0, c0) as f64 * (1.0 - fx) + mask.get(r0, c1) as f64 * fx;
            let bottom = mask.get(r1, c0) as f64 * (1.0 - fx) + mask.get(r1, c1) as f64 * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            values.push((v as f32).clamp(0.0, 1.0));
        }
    }
    Ok(DepthMask { height, width, values })
}

/// Reads an 8- or 16-bit single-channel PNG or PGM, mapping samples to
/// `[0, 1]` by dividing by the type maximum.
pub fn load_depth(path: impl AsRef<Path>) -> Result<RawDepth> {
    let img = ImageReader::open(path.as_ref())?.with_guessed_format()?.decode()?;
    depth_from_image(img)
}

pub fn depth_from_image(img: DynamicImage) -> Result<RawDepth> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = match img {
        DynamicImage::ImageLuma8(buf) => {
            buf.into_raw().into_iter().map(|v| v as f64 / u8::MAX as f64).collect()
        }
        DynamicImage::ImageLuma16(buf) => {
            buf.into_raw().into_iter().map(|v| v as f64 / u16::MAX as f64).collect()
        }
        other => {
            return Err(Error::invalid(format!(
                "depth map must be single-channel 8- or 16-bit grayscale, got {:?}",
                other.color()
            )))
        }
    };
    RawDepth::new(h, w, values)
}

/// An explicit strength mask file, used as-is (no min-max rescaling).
pub fn load_mask(path: impl AsRef<Path>) -> Result<DepthMask> {
    mask_from_raw(&load_depth(path)?)
}

pub fn mask_from_raw(raw: &RawDepth) -> Result<DepthMask> {
    DepthMask::new(raw.height, raw.width, raw.values.iter().map(|&v| v as f32).collect())
}
