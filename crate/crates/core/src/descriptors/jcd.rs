//! Joint composite descriptor: a 24-color fuzzy histogram crossed with seven
//! texture areas, 24 × 7 = 168 values.
//!
//! This is a reconstruction in the spirit of CEDD/FCTH, with constants fixed
//! here:
//!
//! * **Fuzzy colors.** Pixel HSV (S, V on a 0–255 scale) is split into black
//!   (dark V), then achromatic vs chromatic (low vs high S). Achromatic mass
//!   splits into gray/white by V; chromatic mass spreads over seven hue
//!   families (red, orange, yellow, green, cyan, blue, magenta) with
//!   trapezoidal memberships, and each family into dark/normal/light shades.
//!   All memberships use the product rule, so every pixel contributes a total
//!   mass of exactly 1. Bin order: black, gray, white, then
//!   `3 + 3·family + {dark, normal, light}`.
//! * **Texture areas.** The image is padded (edge replication) to a multiple
//!   of 40 and scanned in 40×40 regions. A region's four 20×20 quadrant means
//!   go through the edge-histogram block classifier (areas 0–5); area 6 is
//!   additionally active when the one-level Haar detail energy exceeds 6% of
//!   the region's total energy.
//! * The summed pixel memberships of a region are added to every active area
//!   and the final vector is L1-normalized. Layout: `area·24 + color`.

use super::edge::{classify_block, EdgeKind};
use super::{require_size, DescriptorError};
use crate::imaging::{convert, ColorSpace, ImageTensor};

pub const FUZZY_COLORS: usize = 24;
pub const TEXTURE_AREAS: usize = 7;
const REGION: usize = 40;
const HAAR_ENERGY_FRACTION: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureArea {
    NonEdge,
    NonDirectional,
    Horizontal,
    Vertical,
    Diagonal45,
    Diagonal135,
    HighWaveletEnergy,
}

impl TextureArea {
    pub fn index(self) -> usize {
        self as usize
    }

    fn from_edge(kind: Option<EdgeKind>) -> Self {
        match kind {
            None => TextureArea::NonEdge,
            Some(EdgeKind::NonDirectional) => TextureArea::NonDirectional,
            Some(EdgeKind::Horizontal) => TextureArea::Horizontal,
            Some(EdgeKind::Vertical) => TextureArea::Vertical,
            Some(EdgeKind::Diagonal45) => TextureArea::Diagonal45,
            Some(EdgeKind::Diagonal135) => TextureArea::Diagonal135,
        }
    }
}

/// Trapezoid membership with support (a, d) and plateau [b, c]. Degenerate
/// sides (a == b or c == d) act as shoulders.
fn trapezoid(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    if x < b {
        if b == a {
            1.0
        } else {
            ((x - a) / (b - a)).max(0.0)
        }
    } else if x <= c || d == c {
        1.0
    } else {
        ((d - x) / (d - c)).max(0.0)
    }
}

/// Hue families in degrees; red wraps around 0/360.
const HUE_FAMILIES: [[f64; 4]; 7] = [
    [0.0, 0.0, 5.0, 10.0],
    [5.0, 10.0, 35.0, 50.0],
    [35.0, 50.0, 70.0, 85.0],
    [70.0, 85.0, 150.0, 165.0],
    [150.0, 165.0, 195.0, 205.0],
    [195.0, 205.0, 265.0, 280.0],
    [265.0, 280.0, 315.0, 330.0],
];
const RED_WRAP: [f64; 4] = [315.0, 330.0, 360.0, 360.0];

fn hue_memberships(h: f64) -> [f64; 7] {
    let mut m = [0.0; 7];
    for (f, t) in HUE_FAMILIES.iter().enumerate() {
        // the shoulder convention would give 1 below `a`; clip to the support
        if h >= t[0] && h <= t[3] {
            m[f] = trapezoid(h, t[0], t[1], t[2], t[3]);
        }
    }
    if h >= RED_WRAP[0] {
        m[0] += trapezoid(h, RED_WRAP[0], RED_WRAP[1], RED_WRAP[2], RED_WRAP[3]);
    }
    m
}

/// Fuzzy 24-color membership of an HSV pixel (H in degrees, S and V in [0, 1]).
pub fn fuzzy_color(h: f64, s: f64, v: f64) -> [f64; FUZZY_COLORS] {
    let (s, v) = (s * 255.0, v * 255.0);
    let mut out = [0.0; FUZZY_COLORS];

    let black = trapezoid(v, 0.0, 0.0, 10.0, 75.0);
    let rest = 1.0 - black;
    let s_low = trapezoid(s, 0.0, 0.0, 10.0, 75.0);
    let achromatic = rest * s_low;
    let chromatic = rest * (1.0 - s_low);

    let white = trapezoid(v, 180.0, 230.0, 255.0, 255.0);
    out[0] = black;
    out[1] = achromatic * (1.0 - white);
    out[2] = achromatic * white;

    if chromatic > 0.0 {
        let dark = trapezoid(v, 0.0, 0.0, 68.0, 188.0);
        let pale = trapezoid(s, 0.0, 0.0, 68.0, 188.0);
        let shades = [dark, (1.0 - dark) * (1.0 - pale), (1.0 - dark) * pale];
        for (f, &hm) in hue_memberships(h).iter().enumerate() {
            if hm == 0.0 {
                continue;
            }
            for (k, &sm) in shades.iter().enumerate() {
                out[3 + 3 * f + k] += chromatic * hm * sm;
            }
        }
    }
    out
}

pub fn jcd(img: &ImageTensor) -> Result<Vec<f64>, DescriptorError> {
    require_size("jcd", img, REGION, REGION)?;
    let hsv = convert(img, ColorSpace::Hsv)?;
    let gray = img.gray_plane()?;
    let (w, h) = (img.width(), img.height());
    let pw = w.div_ceil(REGION) * REGION;
    let ph = h.div_ceil(REGION) * REGION;
    let src = |x: usize, y: usize| y.min(h - 1) * w + x.min(w - 1);

    let (hue, sat, val) = (hsv.plane(0), hsv.plane(1), hsv.plane(2));
    let mut hist = vec![0.0; FUZZY_COLORS * TEXTURE_AREAS];
    let mut region_gray = vec![0.0; REGION * REGION];
    for ry in (0..ph).step_by(REGION) {
        for rx in (0..pw).step_by(REGION) {
            let mut colors = [0.0; FUZZY_COLORS];
            for y in 0..REGION {
                for x in 0..REGION {
                    let i = src(rx + x, ry + y);
                    region_gray[y * REGION + x] = gray[i];
                    for (acc, m) in colors.iter_mut().zip(fuzzy_color(hue[i], sat[i], val[i])) {
                        *acc += m;
                    }
                }
            }
            let cells = super::edge::block_cells(&region_gray, REGION, 0, 0, REGION);
            let area = TextureArea::from_edge(classify_block(cells));
            add_area(&mut hist, area, &colors);
            if high_wavelet_energy(&region_gray, REGION) {
                add_area(&mut hist, TextureArea::HighWaveletEnergy, &colors);
            }
        }
    }

    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for v in &mut hist {
            *v /= total;
        }
    }
    Ok(hist)
}

fn add_area(hist: &mut [f64], area: TextureArea, colors: &[f64; FUZZY_COLORS]) {
    let base = area.index() * FUZZY_COLORS;
    for (dst, c) in hist[base..base + FUZZY_COLORS].iter_mut().zip(colors) {
        *dst += c;
    }
}

/// One-level orthonormal 2-D Haar transform of a square region; true when
/// the three detail bands hold more than 6% of the total energy.
pub(crate) fn high_wavelet_energy(region: &[f64], size: usize) -> bool {
    let (mut detail, mut total) = (0.0, 0.0);
    for y in (0..size).step_by(2) {
        for x in (0..size).step_by(2) {
            let a = region[y * size + x];
            let b = region[y * size + x + 1];
            let c = region[(y + 1) * size + x];
            let d = region[(y + 1) * size + x + 1];
            let ll = (a + b + c + d) / 2.0;
            let lh = (a - b + c - d) / 2.0;
            let hl = (a + b - c - d) / 2.0;
            let hh = (a - b - c + d) / 2.0;
            let det = lh * lh + hl * hl + hh * hh;
            detail += det;
            total += ll * ll + det;
        }
    }
    total > 0.0 && detail > HAAR_ENERGY_FRACTION * total
}
