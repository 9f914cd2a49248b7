//! Synthetic 16-class image corpus: each class has its own hue, saturation
//! and texture; every image gets seeded jitter and pixel noise.

use std::path::Path;

use gitract_core::dataset::ClassLabel;
use gitract_core::imaging::ImageTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const IMAGE_SIZE: usize = 64;

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// One image of `class`; `index` selects the jitter.
pub fn class_image(class: usize, index: u64, seed: u64) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((class as u64) << 32) ^ index.wrapping_mul(0x9e37_79b9));
    let hue = class as f64 * 22.5 + rng.random_range(-4.0..4.0);
    let sat = 0.5 + 0.3 * (class % 2) as f64 + rng.random_range(-0.05..0.05);
    let val = rng.random_range(0.6..0.8);
    let period = 6 + 2 * (class % 3);
    let phase = rng.random_range(0..period);
    let pattern = class % 4;
    let noise: Vec<f64> = (0..IMAGE_SIZE * IMAGE_SIZE)
        .map(|_| rng.random_range(-0.04..0.04))
        .collect();
    ImageTensor::from_fn(IMAGE_SIZE, IMAGE_SIZE, |x, y| {
        let sx = x + phase;
        let on = match pattern {
            0 => (sx / (period / 2)).is_multiple_of(2),
            1 => (y / (period / 2)).is_multiple_of(2),
            2 => (sx / period + y / period).is_multiple_of(2),
            _ => ((sx + y) / (period / 2)).is_multiple_of(2),
        };
        let v = (val + if on { 0.15 } else { -0.15 } + noise[y * IMAGE_SIZE + x]).clamp(0.0, 1.0);
        hsv_to_rgb(hue, sat, v)
    })
}

/// `root/<class-name>/img_NNN.png`, `per_class` images for all 16 classes.
pub fn write_corpus(root: &Path, per_class: usize, seed: u64) {
    for label in ClassLabel::all() {
        let dir = root.join(label.name());
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let png = class_image(label.index(), i as u64, seed).encode_png().unwrap();
            std::fs::write(dir.join(format!("img_{i:03}.png")), png).unwrap();
        }
    }
}

/// Extra images drawn like the out-of-patient class, for the training half.
pub fn write_distractors(dir: &Path, count: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let img = class_image(ClassLabel::OUT_OF_PATIENT.index(), 10_000 + i as u64, seed);
        std::fs::write(dir.join(format!("distractor_{i:03}.png")), img.encode_png().unwrap()).unwrap();
    }
}
