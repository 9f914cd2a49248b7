//! Raster images as per-channel `f64` planes, color conversion, and the
//! flip / rotate / resize augmentations.

use std::cell::Cell;
use std::io::{BufRead, Cursor, Read, Seek, SeekFrom};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("cannot decode image near byte {offset}: {message}")]
    Decode { offset: u64, message: String },
    #[error("cannot convert {from:?} to {to:?}")]
    UnsupportedConversion { from: ColorSpace, to: ColorSpace },
    #[error("invalid augmentation: {0}")]
    InvalidAugment(String),
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorSpace {
    Rgb,
    Gray,
    /// H in degrees [0, 360), S and V in [0, 1].
    Hsv,
    /// BT.601 full range, chroma centered at 0.5.
    YCbCr,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            _ => 3,
        }
    }

    /// Inclusive value range of channel `c`.
    pub fn range(self, c: usize) -> (f64, f64) {
        match (self, c) {
            (ColorSpace::Hsv, 0) => (0.0, 360.0),
            _ => (0.0, 1.0),
        }
    }
}

/// A decoded image with row-major planes, one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    planes: Vec<Vec<f64>>,
}

impl ImageTensor {
    pub fn new(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        planes: Vec<Vec<f64>>,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::Invalid("zero-sized image".into()));
        }
        if planes.len() != colorspace.channels() {
            return Err(ImagingError::Invalid(format!(
                "{colorspace:?} needs {} planes, got {}",
                colorspace.channels(),
                planes.len()
            )));
        }
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != width * height {
                return Err(ImagingError::Invalid(format!(
                    "plane {c} has {} samples, expected {}",
                    plane.len(),
                    width * height
                )));
            }
            let (lo, hi) = colorspace.range(c);
            if plane.iter().any(|&v| !(v >= lo && v <= hi)) {
                return Err(ImagingError::Invalid(format!(
                    "plane {c} has values outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            colorspace,
            planes,
        })
    }

    /// Build an RGB tensor from interleaved 8-bit samples.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self, ImagingError> {
        if data.len() != width * height * 3 {
            return Err(ImagingError::Invalid("RGB buffer length mismatch".into()));
        }
        let mut planes = (0..3).map(|_| Vec::with_capacity(width * height)).collect::<Vec<_>>();
        for px in data.chunks_exact(3) {
            for c in 0..3 {
                planes[c].push(px[c] as f64 / 255.0);
            }
        }
        Self::new(width, height, ColorSpace::Rgb, planes)
    }

    /// Constant-color RGB image.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let planes = rgb.iter().map(|&v| vec![v; width * height]).collect();
        Self::new(width, height, ColorSpace::Rgb, planes).expect("valid constant image")
    }

    /// RGB image from a per-pixel closure `f(x, y) -> [r, g, b]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let mut planes = (0..3).map(|_| Vec::with_capacity(width * height)).collect::<Vec<_>>();
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c].clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, ColorSpace::Rgb, planes).expect("valid generated image")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vec<f64> {
        let i = y * self.width + x;
        self.planes.iter().map(|p| p[i]).collect()
    }

    /// Luma plane, converting from RGB when needed.
    pub fn gray_plane(&self) -> Result<Vec<f64>, ImagingError> {
        match self.colorspace {
            ColorSpace::Gray => Ok(self.planes[0].clone()),
            _ => Ok(convert(self, ColorSpace::Gray)?.planes.swap_remove(0)),
        }
    }

    /// Quantize to 8-bit interleaved RGB (gray is replicated).
    pub fn to_rgb8(&self) -> Result<Vec<u8>, ImagingError> {
        let to_u8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let n = self.width * self.height;
        let mut out = Vec::with_capacity(n * 3);
        match self.colorspace {
            ColorSpace::Rgb => {
                for i in 0..n {
                    for c in 0..3 {
                        out.push(to_u8(self.planes[c][i]));
                    }
                }
            }
            ColorSpace::Gray => {
                for &v in &self.planes[0] {
                    out.extend([to_u8(v); 3]);
                }
            }
            other => {
                return Err(ImagingError::UnsupportedConversion {
                    from: other,
                    to: ColorSpace::Rgb,
                })
            }
        }
        Ok(out)
    }

    /// Encode as PNG (debug dumps).
    pub fn encode_png(&self) -> Result<Vec<u8>, ImagingError> {
        let rgb = self.to_rgb8()?;
        let buffer = image::RgbImage::from_raw(self.width as u32, self.height as u32, rgb)
            .ok_or_else(|| ImagingError::Encode("buffer size".into()))?;
        let mut bytes = Vec::new();
        buffer
            .write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)
            .map_err(|e| ImagingError::Encode(e.to_string()))?;
        Ok(bytes)
    }
}

/// Reader that records the furthest byte position the decoder touched.
struct TrackingReader {
    inner: Cursor<Vec<u8>>,
    high_water: Rc<Cell<u64>>,
}

impl TrackingReader {
    fn note(&self) {
        let pos = self.inner.position();
        if pos > self.high_water.get() {
            self.high_water.set(pos);
        }
    }
}

impl Read for TrackingReader {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.note();
        Ok(n)
    }
}

impl BufRead for TrackingReader {
    fn fill_buf(&mut self) -> std::io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.inner.consume(amt);
        self.note();
    }
}

impl Seek for TrackingReader {
    fn seek(&mut self, pos: SeekFrom) -> std::io::Result<u64> {
        let p = self.inner.seek(pos)?;
        self.note();
        Ok(p)
    }
}

/// Decode a PNG or JPEG stream into an RGB tensor with samples `v / 255`.
pub fn decode(bytes: &[u8]) -> Result<ImageTensor, ImagingError> {
    let high_water = Rc::new(Cell::new(0));
    let reader = TrackingReader {
        inner: Cursor::new(bytes.to_vec()),
        high_water: Rc::clone(&high_water),
    };
    let fail = |message: String| ImagingError::Decode {
        offset: high_water.get(),
        message,
    };
    let reader = image::ImageReader::new(reader)
        .with_guessed_format()
        .map_err(|e| fail(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png | image::ImageFormat::Jpeg) => {}
        _ => return Err(fail("not a PNG or JPEG stream".into())),
    }
    let decoded = reader.decode().map_err(|e| fail(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    ImageTensor::from_rgb8(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

pub fn decode_file(path: &std::path::Path) -> Result<ImageTensor, ImagingError> {
    let bytes = std::fs::read(path).map_err(|e| ImagingError::Decode {
        offset: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    decode(&bytes)
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { 0.0 } else { h.max(0.0) };
    let s = if max <= 0.0 { 0.0 } else { delta / max };
    [h, s.clamp(0.0, 1.0), max]
}

fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> [f64; 3] {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 0.5 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 0.5 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [y.clamp(0.0, 1.0), cb.clamp(0.0, 1.0), cr.clamp(0.0, 1.0)]
}

/// Convert an RGB image to `target`. Converting to the current space is a copy.
pub fn convert(img: &ImageTensor, target: ColorSpace) -> Result<ImageTensor, ImagingError> {
    if img.colorspace == target {
        return Ok(img.clone());
    }
    if img.colorspace != ColorSpace::Rgb {
        return Err(ImagingError::UnsupportedConversion {
            from: img.colorspace,
            to: target,
        });
    }
    let n = img.width * img.height;
    let (r, g, b) = (&img.planes[0], &img.planes[1], &img.planes[2]);
    let planes = match target {
        ColorSpace::Gray => vec![(0..n)
            .map(|i| (0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]).clamp(0.0, 1.0))
            .collect()],
        ColorSpace::Hsv | ColorSpace::YCbCr => {
            let f = if target == ColorSpace::Hsv {
                rgb_to_hsv
            } else {
                rgb_to_ycbcr
            };
            let mut planes = (0..3).map(|_| Vec::with_capacity(n)).collect::<Vec<_>>();
            for i in 0..n {
                let px = f(r[i], g[i], b[i]);
                for c in 0..3 {
                    planes[c].push(px[c]);
                }
            }
            planes
        }
        ColorSpace::Rgb => unreachable!(),
    };
    Ok(ImageTensor {
        width: img.width,
        height: img.height,
        colorspace: target,
        planes,
    })
}

/// Flip / rotate / resize recipe, applied in that order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub flip_h: bool,
    pub flip_v: bool,
    /// Counterclockwise, in degrees, within [0, 360).
    pub rotate_deg: f64,
    pub resize_to: Option<(usize, usize)>,
}

impl AugmentSpec {
    /// The default training set of rotations (exact right angles).
    pub fn right_angle_rotations() -> Vec<AugmentSpec> {
        [0.0, 90.0, 180.0, 270.0]
            .into_iter()
            .map(|rotate_deg| AugmentSpec {
                rotate_deg,
                ..Default::default()
            })
            .collect()
    }

    fn validate(&self) -> Result<(), ImagingError> {
        if !(self.rotate_deg >= 0.0 && self.rotate_deg < 360.0) {
            return Err(ImagingError::InvalidAugment(format!(
                "rotation {} outside [0, 360)",
                self.rotate_deg
            )));
        }
        if let Some((w, h)) = self.resize_to {
            if w == 0 || h == 0 {
                return Err(ImagingError::InvalidAugment(format!(
                    "cannot resize to {w}x{h}"
                )));
            }
        }
        Ok(())
    }
}

pub fn augment(img: &ImageTensor, spec: &AugmentSpec) -> Result<ImageTensor, ImagingError> {
    spec.validate()?;
    let mut out = img.clone();
    if spec.flip_h {
        out = flip_horizontal(&out);
    }
    if spec.flip_v {
        out = flip_vertical(&out);
    }
    if spec.rotate_deg != 0.0 {
        out = rotate(&out, spec.rotate_deg);
    }
    if let Some((w, h)) = spec.resize_to {
        out = resize_bilinear(&out, w, h)?;
    }
    Ok(out)
}

fn remap(img: &ImageTensor, src_of: impl Fn(usize, usize) -> Option<(usize, usize)>) -> ImageTensor {
    let (w, h) = (img.width, img.height);
    let mut planes = vec![vec![0.0; w * h]; img.planes.len()];
    for y in 0..h {
        for x in 0..w {
            if let Some((sx, sy)) = src_of(x, y) {
                let (di, si) = (y * w + x, sy * w + sx);
                for (dst, src) in planes.iter_mut().zip(&img.planes) {
                    dst[di] = src[si];
                }
            }
        }
    }
    ImageTensor { planes, ..img.clone() }
}

pub fn flip_horizontal(img: &ImageTensor) -> ImageTensor {
    let w = img.width;
    remap(img, |x, y| Some((w - 1 - x, y)))
}

pub fn flip_vertical(img: &ImageTensor) -> ImageTensor {
    let h = img.height;
    remap(img, |x, y| Some((x, h - 1 - y)))
}

/// Rotate counterclockwise about the image center, keeping the canvas size.
/// Nearest-neighbor sampling; uncovered pixels are black (zero).
pub fn rotate(img: &ImageTensor, degrees: f64) -> ImageTensor {
    let quarter = degrees / 90.0;
    let (sin, cos) = if quarter.fract() == 0.0 {
        // exact trig for right angles
        match (quarter as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    };
    let (w, h) = (img.width as f64, img.height as f64);
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    remap(img, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        // y grows downward, so a visual counterclockwise turn maps the source
        // offset (sx, sy) to (sx·cos + sy·sin, −sx·sin + sy·cos).
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        let (sx, sy) = (sx.round(), sy.round());
        (sx >= 0.0 && sy >= 0.0 && sx < w && sy < h).then_some((sx as usize, sy as usize))
    })
}

/// Bilinear resize with pixel-center alignment and edge clamping.
pub fn resize_bilinear(
    img: &ImageTensor,
    new_w: usize,
    new_h: usize,
) -> Result<ImageTensor, ImagingError> {
    if new_w == 0 || new_h == 0 {
        return Err(ImagingError::InvalidAugment(format!(
            "cannot resize to {new_w}x{new_h}"
        )));
    }
    if new_w == img.width && new_h == img.height {
        return Ok(img.clone());
    }
    let axis = |n_src: usize, n_dst: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_src as f64 / n_dst as f64;
        (0..n_dst)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(img.width, new_w);
    let ys = axis(img.height, new_h);
    let w = img.width;
    let mut planes = Vec::with_capacity(img.planes.len());
    for (c, src) in img.planes.iter().enumerate() {
        let (lo, hi) = img.colorspace.range(c);
        let mut dst = Vec::with_capacity(new_w * new_h);
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let p00 = src[y0 * w + x0];
                let p10 = src[y0 * w + x1];
                let p01 = src[y1 * w + x0];
                let p11 = src[y1 * w + x1];
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                dst.push((top + (bottom - top) * fy).clamp(lo, hi));
            }
        }
        planes.push(dst);
    }
    Ok(ImageTensor {
        width: new_w,
        height: new_h,
        colorspace: img.colorspace,
        planes,
    })
}
