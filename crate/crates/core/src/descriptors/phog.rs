//! Pyramid histogram of oriented gradients: Sobel gradients, 8 orientation
//! bins over the full circle, pyramid levels 0..=2 (1 + 4 + 16 cells).

use super::{require_size, DescriptorError};
use crate::imaging::ImageTensor;

pub const ORIENTATION_BINS: usize = 8;
pub const LEVELS: u32 = 3;

/// 168 values: level 0, then level 1 cells, then level 2 cells (row-major),
/// 8 bins each, normalized to sum 1. Bin k is centered on k·45°, angles are
/// measured counterclockwise from +x with y pointing up.
pub fn phog(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    let mut hist = phog_unnormalized(img)?;
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for v in &mut hist {
            *v /= total;
        }
    }
    Ok(hist)
}

/// Magnitude-weighted pyramid histogram before the global normalization.
pub(crate) fn phog_unnormalized(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("phog", img, 4, 4)?;
    let gray = img.gray_plane()?;
    let (w, h) = (img.width(), img.height());
    let at = |x: usize, y: usize| gray[y * w + x];

    let level_offsets: Vec<usize> = (0..LEVELS)
        .scan(0, |acc, l| {
            let start = *acc;
            *acc += (1 << (2 * l)) * ORIENTATION_BINS;
            Some(start)
        })
        .collect();
    let len = (0..LEVELS).map(|l| (1usize << (2 * l)) * ORIENTATION_BINS).sum();
    let mut hist = vec![0.0; len];

    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1))
                - (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1));
            let magnitude = (gx * gx + gy * gy).sqrt();
            if magnitude == 0.0 {
                continue;
            }
            let bin = orientation_bin(gy.atan2(gx).to_degrees());
            for level in 0..LEVELS {
                let n = 1usize << level;
                let cell = (y * n / h) * n + x * n / w;
                hist[level_offsets[level as usize] + cell * ORIENTATION_BINS + bin] += magnitude;
            }
        }
    }
    Ok(hist)
}

pub(crate) fn orientation_bin(degrees: f64) -> usize {
    let width = 360.0 / ORIENTATION_BINS as f64;
    let angle = degrees.rem_euclid(360.0);
    ((angle + width / 2.0) / width) as usize % ORIENTATION_BINS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_centered() {
        assert_eq!(orientation_bin(0.0), 0);
        assert_eq!(orientation_bin(-10.0), 0);
        assert_eq!(orientation_bin(45.0), 1);
        assert_eq!(orientation_bin(45.000000001), 1);
        assert_eq!(orientation_bin(90.0), 2);
        assert_eq!(orientation_bin(-90.0), 6);
        assert_eq!(orientation_bin(350.0), 0);
    }

    #[test]
    fn constant_image_is_zero() {
        let out = phog(&ImageTensor::filled(16, 16, [0.3, 0.3, 0.3])).unwrap();
        assert_eq!(out.len(), 168);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn levels_repartition_the_same_mass() {
        let img = ImageTensor::from_fn(33, 29, |x, y| {
            let v = ((x * x + 3 * y) % 17) as f64 / 16.0;
            [v, v, v]
        });
        let raw = phog_unnormalized(&img).unwrap();
        let l0: f64 = raw[0..8].iter().sum();
        let l1: f64 = raw[8..40].iter().sum();
        let l2: f64 = raw[40..168].iter().sum();
        assert!((l0 - l1).abs() < 1e-9 * l0);
        assert!((l0 - l2).abs() < 1e-9 * l0);
        let norm = phog(&img).unwrap();
        assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_images() {
        assert!(phog(&ImageTensor::filled(3, 10, [0.0; 3])).is_err());
    }
}
