//! Raster images and their planar tensor form.

use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader, RgbImage};
use log::warn;

use crate::error::{Error, Result};
use crate::nn::layers::reflect_index;
use crate::tensor::Tensor3;

/// 8-bit RGB, row-major interleaved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != height * width * 3 {
            return Err(Error::invalid(format!(
                "{height}x{width} RGB image needs {} bytes, got {}",
                height * width * 3,
                pixels.len()
            )));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        let o = (i * self.width + j) * 3;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn from_dynamic(img: DynamicImage) -> Self {
        if img.color().has_alpha() {
            warn!("discarding alpha channel");
        }
        let rgb = img.into_rgb8();
        let (w, h) = rgb.dimensions();
        Self { height: h as usize, width: w as usize, pixels: rgb.into_raw() }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?;
        Ok(Self::from_dynamic(img))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = ImageReader::open(path.as_ref())?.with_guessed_format()?.decode()?;
        Ok(Self::from_dynamic(img))
    }

    /// PNG unless the extension is `.ppm`/`.pnm`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).unwrap_or_default();
        let format = match ext.as_str() {
            "ppm" | "pnm" => ImageFormat::Pnm,
            _ => ImageFormat::Png,
        };
        let buf = RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("pixel buffer length matches dimensions");
        buf.save_with_format(path, format)?;
        Ok(())
    }
}

/// Planar R, G, B with each sample scaled to `[0, 1]`.
pub fn to_tensor(img: &RasterImage) -> Tensor3 {
    let plane = img.height * img.width;
    let mut data = vec![0.0f32; 3 * plane];
    for (p, px) in img.pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + p] = px[c] as f32 / 255.0;
        }
    }
    Tensor3::from_parts(3, img.height, img.width, data)
}

/// Clamps to `[0, 1]`, scales by 255 and rounds half away from zero.
pub fn from_tensor(t: &Tensor3) -> Result<RasterImage> {
    if t.channels() != 3 {
        return Err(Error::invalid(format!("expected 3 channels, got {}", t.channels())));
    }
    let plane = t.plane_len();
    let mut pixels = Vec::with_capacity(3 * plane);
    for p in 0..plane {
        for c in 0..3 {
            let v = t.data()[c * plane + p].clamp(0.0, 1.0);
            pixels.push((v * 255.0).round() as u8);
        }
    }
    Ok(RasterImage { height: t.height(), width: t.width(), pixels })
}

/// Reflect-pads right and bottom so both dimensions are multiples of `m`.
/// Returns the padded tensor and the original `(height, width)`.
pub fn pad_to_multiple(t: &Tensor3, m: usize) -> Result<(Tensor3, (usize, usize))> {
    if m == 0 {
        return Err(Error::invalid("padding multiple must be at least 1"));
    }
    let (c, h, w) = t.shape();
    let ph = h.div_ceil(m) * m;
    let pw = w.div_ceil(m) * m;
    if (ph > h && h < 2) || (pw > w && w < 2) {
        return Err(Error::invalid(format!("cannot reflect-pad a {h}x{w} image")));
    }
    if (ph, pw) == (h, w) {
        return Ok((t.clone(), (h, w)));
    }
    let mut data = Vec::with_capacity(c * ph * pw);
    for ch in 0..c {
        let plane = t.channel(ch);
        for i in 0..ph {
            let si = if i < h { i } else { reflect_index(i as isize, h) };
            let row = &plane[si * w..(si + 1) * w];
            data.extend_from_slice(row);
            data.extend((w..pw).map(|j| row[reflect_index(j as isize, w)]));
        }
    }
    Ok((Tensor3::from_parts(c, ph, pw, data), (h, w)))
}

/// Keeps the top-left `height x width` region, undoing [`pad_to_multiple`].
pub fn crop_to(t: &Tensor3, height: usize, width: usize) -> Result<Tensor3> {
    let (c, h, w) = t.shape();
    if height > h || width > w {
        return Err(Error::invalid(format!("cannot crop {h}x{w} to {height}x{width}")));
    }
    if (height, width) == (h, w) {
        return Ok(t.clone());
    }
    let mut data = Vec::with_capacity(c * height * width);
    for ch in 0..c {
        let plane = t.channel(ch);
        for i in 0..height {
            data.extend_from_slice(&plane[i * w..i * w + width]);
        }
    }
    Ok(Tensor3::from_parts(c, height, width, data))
}
