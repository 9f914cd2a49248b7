//! Edge histogram: 4×4 sub-images, each tiled into square blocks that are
//! classified by the five 2×2-cell edge filters.

use std::f64::consts::SQRT_2;

use super::{require_size, DescriptorError};
use crate::imaging::ImageTensor;

/// Minimum filter response for a block to count as an edge (11 on a 0–255 scale).
pub const EDGE_THRESHOLD: f64 = 11.0 / 255.0;
const SUB_GRID: usize = 4;
const TARGET_BLOCKS: f64 = 1100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Vertical,
    Horizontal,
    Diagonal45,
    Diagonal135,
    NonDirectional,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [
        EdgeKind::Vertical,
        EdgeKind::Horizontal,
        EdgeKind::Diagonal45,
        EdgeKind::Diagonal135,
        EdgeKind::NonDirectional,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Classify a block from its cell means `[top-left, top-right, bottom-left,
/// bottom-right]`. Returns `None` when no filter exceeds the threshold; ties
/// between filters go to the earlier kind in [`EdgeKind::ALL`].
pub fn classify_block(cells: [f64; 4]) -> Option<EdgeKind> {
    let [a0, a1, a2, a3] = cells;
    let responses = [
        (a0 - a1 + a2 - a3).abs(),
        (a0 + a1 - a2 - a3).abs(),
        (SQRT_2 * a0 - SQRT_2 * a3).abs(),
        (SQRT_2 * a1 - SQRT_2 * a2).abs(),
        (2.0 * a0 - 2.0 * a1 - 2.0 * a2 + 2.0 * a3).abs(),
    ];
    let mut best = 0;
    for i in 1..responses.len() {
        if responses[i] > responses[best] {
            best = i;
        }
    }
    (responses[best] > EDGE_THRESHOLD).then_some(EdgeKind::ALL[best])
}

/// Block edge length for a sub-image: the even size giving roughly 1100
/// blocks, never below 2.
pub(crate) fn block_size(sub_w: usize, sub_h: usize) -> usize {
    let b = ((sub_w * sub_h) as f64 / TARGET_BLOCKS).sqrt() / 2.0;
    (b.floor() as usize * 2).max(2)
}

/// Mean of each quadrant of the `b × b` block at (x0, y0).
pub(crate) fn block_cells(gray: &[f64], w: usize, x0: usize, y0: usize, b: usize) -> [f64; 4] {
    let half = b / 2;
    let mut cells = [0.0; 4];
    for (q, cell) in cells.iter_mut().enumerate() {
        let cx = x0 + (q % 2) * half;
        let cy = y0 + (q / 2) * half;
        let mut sum = 0.0;
        for y in cy..cy + half {
            sum += gray[y * w + cx..y * w + cx + half].iter().sum::<f64>();
        }
        *cell = sum / (half * half) as f64;
    }
    cells
}

/// 80 values: for each of the 16 sub-images (row-major), the fraction of its
/// blocks classified as vertical, horizontal, 45°, 135° and non-directional.
pub fn edge_histogram(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("edge_histogram", img, 16, 16)?;
    let gray = img.gray_plane()?;
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(SUB_GRID * SUB_GRID * 5);
    for sy in 0..SUB_GRID {
        let (y0, y1) = (sy * h / SUB_GRID, (sy + 1) * h / SUB_GRID);
        for sx in 0..SUB_GRID {
            let (x0, x1) = (sx * w / SUB_GRID, (sx + 1) * w / SUB_GRID);
            let b = block_size(x1 - x0, y1 - y0);
            let (nx, ny) = ((x1 - x0) / b, (y1 - y0) / b);
            let mut counts = [0usize; 5];
            for by in 0..ny {
                for bx in 0..nx {
                    let cells = block_cells(&gray, w, x0 + bx * b, y0 + by * b, b);
                    if let Some(kind) = classify_block(cells) {
                        counts[kind.index()] += 1;
                    }
                }
            }
            let blocks = (nx * ny).max(1) as f64;
            out.extend(counts.iter().map(|&c| c as f64 / blocks));
        }
    }
    Ok(out)
}
