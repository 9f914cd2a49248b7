//! Tamura coarseness, contrast and a 16-bin directionality histogram.

use std::f64::consts::PI;

use super::{require_size, DescriptorError};
use crate::imaging::ImageTensor;

const MAX_SCALE: u32 = 5;
pub const DIRECTION_BINS: usize = 16;
const GRADIENT_THRESHOLD: f64 = 0.01;
/// Scale differences smaller than this are ties; integral-image sums carry
/// rounding error of about 1e-11 on 512×512 images.
const TIE_TOLERANCE: f64 = 1e-9;

/// `[coarseness, contrast, directionality[16]]`.
pub fn tamura(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("tamura", img, 32, 32)?;
    let gray = img.gray_plane()?;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(18);
    out.push(coarseness(&gray, w, h));
    out.push(contrast(&gray));
    out.extend(directionality(&gray, w, h));
    Ok(out)
}

pub fn tamura_coarseness(img: &ImageTensor) -> Result<f64, DescriptorError> {
    require_size("tamura", img, 32, 32)?;
    Ok(coarseness(&img.gray_plane()?, img.width(), img.height()))
}

pub fn tamura_contrast(img: &ImageTensor) -> Result<f64, DescriptorError> {
    Ok(contrast(&img.gray_plane()?))
}

pub fn tamura_directionality(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("tamura", img, 3, 3)?;
    Ok(directionality(&img.gray_plane()?, img.width(), img.height()))
}

/// Summed-area table with a zero row and column in front.
struct Integral {
    sums: Vec<f64>,
    stride: usize,
}

impl Integral {
    fn new(plane: &[f64], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += plane[y * w + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { sums, stride }
    }

    /// Mean over the half-open box [x0, x1) × [y0, y1).
    fn mean(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        let total = self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0];
        total / ((x1 - x0) * (y1 - y0)) as f64
    }
}

/// Mean over pixels of 2^k_best, where k_best ∈ 1..=5 maximizes the larger of
/// the horizontal and vertical differences between opposite 2^k windows.
/// Windows are clipped at the borders; ties (within [`TIE_TOLERANCE`]) keep
/// the smaller scale.
fn coarseness(gray: &[f64], w: usize, h: usize) -> f64 {
    let integral = Integral::new(gray, w, h);
    let n = w * h;
    let mut best_e = vec![f64::NEG_INFINITY; n];
    let mut best_k = vec![1u32; n];
    let mut averages = vec![0.0; n];
    for k in 1..=MAX_SCALE {
        let half = 1usize << (k - 1);
        for y in 0..h {
            let y0 = y.saturating_sub(half);
            let y1 = (y + half).min(h);
            for x in 0..w {
                let x0 = x.saturating_sub(half);
                let x1 = (x + half).min(w);
                averages[y * w + x] = integral.mean(x0, y0, x1, y1);
            }
        }
        for y in 0..h {
            let up = y.saturating_sub(half);
            let down = (y + half).min(h - 1);
            for x in 0..w {
                let left = x.saturating_sub(half);
                let right = (x + half).min(w - 1);
                let eh = (averages[y * w + right] - averages[y * w + left]).abs();
                let ev = (averages[down * w + x] - averages[up * w + x]).abs();
                let e = eh.max(ev);
                let i = y * w + x;
                if e > best_e[i] + TIE_TOLERANCE {
                    best_e[i] = e;
                    best_k[i] = k;
                }
            }
        }
    }
    best_k.iter().map(|&k| (1u32 << k) as f64).sum::<f64>() / n as f64
}

/// σ / α4^¼ with α4 = μ4 / σ⁴; zero for a flat image.
fn contrast(gray: &[f64]) -> f64 {
    let n = gray.len() as f64;
    // moments about the first pixel first, so flat images give exact zeros
    let shift = gray[0];
    let mean = gray.iter().map(|v| v - shift).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in gray {
        let d = (v - shift) - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 <= 0.0 || m4 <= 0.0 {
        return 0.0;
    }
    let sigma = m2.sqrt();
    let kurtosis = m4 / (m2 * m2);
    sigma / kurtosis.powf(0.25)
}

/// L1-normalized histogram of Prewitt edge angles in [0, π) over interior
/// pixels whose mean absolute response exceeds 0.01.
fn directionality(gray: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut hist = vec![0.0; DIRECTION_BINS];
    let at = |x: usize, y: usize| gray[y * w + x];
    let mut count = 0usize;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let mut dh = 0.0;
            let mut dv = 0.0;
            for d in 0..3 {
                dh += at(x + 1, y + d - 1) - at(x - 1, y + d - 1);
                dv += at(x + d - 1, y - 1) - at(x + d - 1, y + 1);
            }
            if (dh.abs() + dv.abs()) / 2.0 <= GRADIENT_THRESHOLD {
                continue;
            }
            let mut theta = dv.atan2(dh);
            if theta < 0.0 {
                theta += PI;
            }
            if theta >= PI {
                theta -= PI;
            }
            let bin = ((theta / (PI / DIRECTION_BINS as f64)) as usize).min(DIRECTION_BINS - 1);
            hist[bin] += 1.0;
            count += 1;
        }
    }
    if count > 0 {
        for v in &mut hist {
            *v /= count as f64;
        }
    }
    hist
}
