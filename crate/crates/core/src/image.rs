//! 8-bit grayscale rasters, color conversion and scale pyramids.

use crate::error::{Error, Result};

/// Smallest side length kept in a pyramid.
pub const MIN_PYRAMID_SIDE: usize = 16;

/// Row-major 8-bit single-channel image.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "buffer of {} bytes does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Image filled with a single value. Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Bilinear sample at continuous pixel-center coordinates. Returns `None`
    /// outside `[0, w-1] x [0, h-1]`.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= max_x && y <= max_y) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width - 1);
        let y0 = (y.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        Some(top + (bottom - top) * fy)
    }

    /// Expands to RGBA with every channel equal to the gray value and alpha 255.
    pub fn to_rgba(&self) -> Vec<u8> {
        self.data.iter().flat_map(|&g| [g, g, g, 255]).collect()
    }
}

/// Converts interleaved RGBA pixels to gray with integer-rounded BT.601 luma,
/// `round(0.299 R + 0.587 G + 0.114 B)`. Alpha is ignored.
pub fn to_gray(rgba: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    if rgba.len() != width * height * 4 {
        return Err(Error::InvalidInput(format!(
            "rgba buffer of {} bytes does not match {width}x{height}x4",
            rgba.len()
        )));
    }
    let data = rgba
        .chunks_exact(4)
        .map(|px| {
            let luma = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((luma + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage::new(width, height, data)
}

/// Scale pyramid; level 0 is the input image.
#[derive(Debug, Clone)]
pub struct ImagePyramid {
    pub levels: Vec<GrayImage>,
    pub scale_factor: f64,
}

impl ImagePyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Scale from level `k` coordinates to level 0.
    pub fn scale(&self, level: usize) -> f64 {
        self.scale_factor.powi(level as i32)
    }
}

/// Builds a pyramid with level `k` of size `floor(dim / scale^k)`. Levels
/// that would drop below 16 px on a side are not generated.
pub fn build_pyramid(image: &GrayImage, levels: usize, scale_factor: f64) -> Result<ImagePyramid> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    if !(scale_factor > 1.0) {
        return Err(Error::InvalidInput(format!("scale factor must exceed 1, got {scale_factor}")));
    }
    if image.width() < MIN_PYRAMID_SIDE || image.height() < MIN_PYRAMID_SIDE {
        return Err(Error::InvalidInput(format!(
            "image {}x{} smaller than {MIN_PYRAMID_SIDE}x{MIN_PYRAMID_SIDE}",
            image.width(),
            image.height()
        )));
    }
    let mut out = vec![image.clone()];
    for k in 1..levels {
        let s = scale_factor.powi(k as i32);
        let w = (image.width() as f64 / s).floor() as usize;
        let h = (image.height() as f64 / s).floor() as usize;
        if w < MIN_PYRAMID_SIDE || h < MIN_PYRAMID_SIDE {
            break;
        }
        out.push(resize_from(&out[k - 1], w, h, scale_factor));
    }
    Ok(ImagePyramid { levels: out, scale_factor })
}

// Samples the source at the centers of the output pixels. For a factor of 2
// that is the rounded mean of each 2x2 block.
fn resize_from(src: &GrayImage, w: usize, h: usize, factor: f64) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let sx = ((x as f64 + 0.5) * factor - 0.5).min((src.width() - 1) as f64);
        let sy = ((y as f64 + 0.5) * factor - 0.5).min((src.height() - 1) as f64);
        let v = src.sample_bilinear(sx, sy).unwrap_or(0.0);
        (v + 0.5).floor().clamp(0.0, 255.0) as u8
    })
}

/// 5x5 box filter with clamped borders, rounded to nearest.
pub fn box_blur5(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width(), image.height());
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut horiz = vec![0u32; w * h];
    for y in 0..h {
        let row = image.row(y);
        for x in 0..w {
            let mut s = 0u32;
            for dx in -2isize..=2 {
                s += row[clamp(x as isize + dx, w)] as u32;
            }
            horiz[y * w + x] = s;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0u32;
            for dy in -2isize..=2 {
                s += horiz[clamp(y as isize + dy, h) * w + x];
            }
            out[y * w + x] = ((s + 12) / 25) as u8;
        }
    }
    GrayImage { width: w, height: h, data: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_buffers() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn gray_white_and_black() {
        let white = to_gray(&[255; 16], 2, 2).unwrap();
        assert_eq!(white.data(), &[255; 4]);
        let black = to_gray(&[0; 4], 1, 1).unwrap();
        assert_eq!(black.data(), &[0]);
    }

    #[test]
    fn gray_luma_hand_value() {
        // 0.299*100 + 0.587*200 + 0.114*50 = 29.9 + 117.4 + 5.7 = 153.0
        let g = to_gray(&[100, 200, 50, 255], 1, 1).unwrap();
        assert_eq!(g.data(), &[153]);
    }

    #[test]
    fn gray_length_mismatch() {
        assert!(matches!(to_gray(&[0; 7], 1, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gray_roundtrip_of_expanded_gray() {
        let img = GrayImage::from_fn(16, 3, |x, y| (x * 16 + y) as u8);
        let back = to_gray(&img.to_rgba(), 16, 3).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pyramid_levels() {
        let img = GrayImage::filled(320, 240, 7);
        let p = build_pyramid(&img, 1, 2.0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.levels[0], img);

        let p = build_pyramid(&img, 4, 2.0).unwrap();
        let dims: Vec<_> = p.levels.iter().map(|l| (l.width(), l.height())).collect();
        assert_eq!(dims, vec![(320, 240), (160, 120), (80, 60), (40, 30)]);
        assert!(p.levels.iter().all(|l| l.data().iter().all(|&v| v == 7)));
    }

    #[test]
    fn pyramid_truncates_small_levels() {
        let img = GrayImage::filled(24, 24, 0);
        let p = build_pyramid(&img, 8, 2.0).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn pyramid_rejects_tiny_images() {
        assert!(build_pyramid(&GrayImage::filled(15, 40, 0), 2, 2.0).is_err());
        assert!(build_pyramid(&GrayImage::filled(40, 40, 0), 0, 2.0).is_err());
        assert!(build_pyramid(&GrayImage::filled(40, 40, 0), 2, 1.0).is_err());
    }

    #[test]
    fn half_scale_is_block_mean() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let half = resize_from(&img, 1, 1, 2.0);
        assert_eq!(half.get(0, 0), 128);
    }

    #[test]
    fn bilinear_is_exact_on_grid() {
        let img = GrayImage::from_fn(5, 4, |x, y| (x * 10 + y) as u8);
        assert_eq!(img.sample_bilinear(3.0, 2.0), Some(32.0));
        assert_eq!(img.sample_bilinear(0.5, 0.0), Some(5.0));
        assert_eq!(img.sample_bilinear(-0.1, 0.0), None);
        assert_eq!(img.sample_bilinear(4.0, 3.0), Some(43.0));
    }

    #[test]
    fn box_blur_constant() {
        let img = GrayImage::filled(9, 9, 77);
        assert_eq!(box_blur5(&img), img);
    }
}
