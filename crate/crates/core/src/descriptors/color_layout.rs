//! Color layout: 8×8 grid of mean YCbCr colors, DCT per channel, the first
//! zigzag coefficients kept (6 luma, 3 + 3 chroma).
//!
//! Coefficients use the orthonormal 2-D DCT-II divided by 8, so the DC term
//! equals the mean of the 64 cell values.

use std::f64::consts::PI;

use super::{require_size, DescriptorError};
use crate::imaging::{convert, ColorSpace, ImageTensor};

const GRID: usize = 8;
/// (row = vertical frequency, column = horizontal frequency) in zigzag order.
pub(crate) const ZIGZAG: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)];
const LUMA_COEFFS: usize = 6;
const CHROMA_COEFFS: usize = 3;

pub fn color_layout(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("color_layout", img, GRID, GRID)?;
    let ycc = convert(img, ColorSpace::YCbCr)?;
    let mut out = Vec::with_capacity(LUMA_COEFFS + 2 * CHROMA_COEFFS);
    for (c, keep) in [(0, LUMA_COEFFS), (1, CHROMA_COEFFS), (2, CHROMA_COEFFS)] {
        let grid = cell_means(ycc.plane(c), ycc.width(), ycc.height());
        let coeffs = dct8x8(&grid);
        out.extend(ZIGZAG[..keep].iter().map(|&(v, u)| coeffs[v][u]));
    }
    Ok(out)
}

fn cell_means(plane: &[f64], w: usize, h: usize) -> [[f64; GRID]; GRID] {
    let mut grid = [[0.0; GRID]; GRID];
    for (gy, row) in grid.iter_mut().enumerate() {
        let (y0, y1) = (gy * h / GRID, (gy + 1) * h / GRID);
        for (gx, cell) in row.iter_mut().enumerate() {
            let (x0, x1) = (gx * w / GRID, (gx + 1) * w / GRID);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += plane[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            *cell = sum / ((x1 - x0) * (y1 - y0)) as f64;
        }
    }
    grid
}

/// Basis table with `basis[u][7 - x] == ±basis[u][x]` enforced exactly, so
/// mirror-symmetric inputs cancel exactly in the odd frequencies.
fn basis() -> [[f64; GRID]; GRID] {
    let mut table = [[0.0; GRID]; GRID];
    for (u, row) in table.iter_mut().enumerate() {
        let scale = if u == 0 { (0.5f64).sqrt() } else { 1.0 };
        for x in 0..GRID / 2 {
            let c = scale * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            row[x] = c;
            row[GRID - 1 - x] = if u % 2 == 0 { c } else { -c };
        }
    }
    table
}

fn transform_1d(input: &[f64; GRID], basis: &[[f64; GRID]; GRID]) -> [f64; GRID] {
    let mut out = [0.0; GRID];
    for (u, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for x in 0..GRID / 2 {
            let x2 = GRID - 1 - x;
            acc += input[x] * basis[u][x] + input[x2] * basis[u][x2];
        }
        *o = acc;
    }
    out
}

/// `coeffs[v][u]`, v vertical and u horizontal frequency.
fn dct8x8(grid: &[[f64; GRID]; GRID]) -> [[f64; GRID]; GRID] {
    let mean = grid.iter().flatten().sum::<f64>() / (GRID * GRID) as f64;
    // AC terms are computed on the mean-free grid; the DCT of a constant has
    // no AC energy, so this changes nothing but rounding.
    let mut centered = [[0.0; GRID]; GRID];
    for (dst, src) in centered.iter_mut().zip(grid) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = s - mean;
        }
    }
    let basis = basis();
    let rows: Vec<[f64; GRID]> = centered.iter().map(|r| transform_1d(r, &basis)).collect();
    let mut coeffs = [[0.0; GRID]; GRID];
    for u in 0..GRID {
        let column: [f64; GRID] = std::array::from_fn(|y| rows[y][u]);
        let col = transform_1d(&column, &basis);
        for v in 0..GRID {
            // orthonormal factor 1/4 times the 1/8 output scale
            coeffs[v][u] = col[v] / 32.0;
        }
    }
    coeffs[0][0] = mean;
    coeffs
}
