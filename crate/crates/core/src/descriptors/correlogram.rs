//! Auto color correlogram over 64 quantized HSV colors and L∞ distances 1..=4.

use super::DescriptorError;
use crate::imaging::{convert, ColorSpace, ImageTensor};

pub const COLORS: usize = 64;
pub const DISTANCES: [usize; 4] = [1, 2, 3, 4];

/// 8 hue × 4 saturation × 2 value bins; index `(h·4 + s)·2 + v`.
pub fn quantize_hsv(h: f64, s: f64, v: f64) -> usize {
    let hb = ((h / 45.0) as usize).min(7);
    let sb = ((s * 4.0) as usize).min(3);
    let vb = ((v * 2.0) as usize).min(1);
    (hb * 4 + sb) * 2 + vb
}

/// For each color c and distance d, the probability that a pixel at L∞
/// distance exactly d from a c-colored pixel is also c. Only neighbors that
/// fall inside the image are counted; absent colors yield 0. Output index is
/// `c·4 + (d − 1)`.
pub fn auto_color_correlogram(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    let hsv = convert(img, ColorSpace::Hsv)?;
    let (w, h) = (hsv.width(), hsv.height());
    let quant: Vec<u8> = (0..w * h)
        .map(|i| quantize_hsv(hsv.plane(0)[i], hsv.plane(1)[i], hsv.plane(2)[i]) as u8)
        .collect();

    let mut same = vec![[0u64; 4]; COLORS];
    let mut total = vec![[0u64; 4]; COLORS];
    for (di, &d) in DISTANCES.iter().enumerate() {
        // Offsets come in ± pairs and "same color" is symmetric, so each
        // half-ring match stands for two ordered pairs.
        for (dx, dy) in ring_offsets(d as isize).into_iter().filter(|&(x, y)| y > 0 || (y == 0 && x > 0)) {
            // pixels p with p + (dx, dy) inside the image
            let xs = (-dx).max(0) as usize..(w as isize - dx).clamp(0, w as isize) as usize;
            let y_hi = (h as isize - dy).clamp(0, h as isize) as usize;
            if xs.start >= xs.end {
                continue;
            }
            for y in 0..y_hi {
                let row = &quant[y * w..(y + 1) * w];
                let ny = (y as isize + dy) as usize;
                let other = &quant[ny * w..(ny + 1) * w];
                let shifted = &other[(xs.start as isize + dx) as usize..(xs.end as isize + dx) as usize];
                for (&c, &q) in row[xs.clone()].iter().zip(shifted) {
                    same[c as usize][di] += 2 * u64::from(c == q);
                }
            }
        }
        // in-image ring neighbors: (2d+1)² box minus the (2d−1)² box, clipped
        let d = d as isize;
        for y in 0..h {
            let (oy, iy) = (span(y, h, d), span(y, h, d - 1));
            for x in 0..w {
                let ring = span(x, w, d) * oy - span(x, w, d - 1) * iy;
                total[quant[y * w + x] as usize][di] += ring;
            }
        }
    }

    let mut out = Vec::with_capacity(COLORS * DISTANCES.len());
    for c in 0..COLORS {
        for di in 0..DISTANCES.len() {
            out.push(if total[c][di] == 0 {
                0.0
            } else {
                same[c][di] as f64 / total[c][di] as f64
            });
        }
    }
    Ok(out)
}

/// Number of integers in `[p − r, p + r] ∩ [0, n)`.
fn span(p: usize, n: usize, r: isize) -> u64 {
    let lo = (p as isize - r).max(0);
    let hi = (p as isize + r).min(n as isize - 1);
    (hi - lo + 1).max(0) as u64
}

/// The 8d offsets at Chebyshev distance exactly d.
fn ring_offsets(d: isize) -> Vec<(isize, isize)> {
    let mut offsets = Vec::with_capacity(8 * d as usize);
    for dx in -d..=d {
        offsets.push((dx, -d));
        offsets.push((dx, d));
    }
    for dy in -d + 1..d {
        offsets.push((-d, dy));
        offsets.push((d, dy));
    }
    offsets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_sizes() {
        for d in 1..=4 {
            let ring = ring_offsets(d);
            assert_eq!(ring.len(), 8 * d as usize);
            assert!(ring.iter().all(|&(x, y)| x.abs().max(y.abs()) == d));
        }
    }

    #[test]
    fn quantizer_corners() {
        assert_eq!(quantize_hsv(0.0, 0.0, 0.0), 0);
        assert_eq!(quantize_hsv(359.9, 1.0, 1.0), 63);
        assert_eq!(quantize_hsv(0.0, 1.0, 1.0), 7);
    }

    #[test]
    fn single_color_image() {
        let img = ImageTensor::filled(10, 7, [1.0, 0.0, 0.0]);
        let out = auto_color_correlogram(&img).unwrap();
        let red = quantize_hsv(0.0, 1.0, 1.0);
        for c in 0..COLORS {
            for di in 0..4 {
                let expected = if c == red { 1.0 } else { 0.0 };
                assert_eq!(out[c * 4 + di], expected);
            }
        }
    }
}
