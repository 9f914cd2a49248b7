//! Published confusion matrix and metric rows, plus a brute-force R_k.

use gitract_core::metrics::ConfusionMatrix;

/// Method-5 confusion matrix, rows = actual class, columns = predicted,
/// classes in index order (letters A..P).
pub fn published_confusion() -> ConfusionMatrix {
    let diagonal = [53, 81, 130, 122, 115, 10, 125, 132, 121, 3, 172, 71, 118, 39, 110, 129];
    let off_diagonal = [
        (2, 3, 7),
        (2, 15, 1),
        (3, 2, 3),
        (4, 8, 19),
        (5, 10, 1),
        (8, 4, 11),
        (9, 5, 1),
        (10, 1, 1),
        (10, 6, 6),
        (10, 7, 2),
        (11, 6, 1),
        (12, 11, 2),
        (15, 4, 1),
        (15, 5, 1),
        (15, 6, 2),
        (15, 10, 4),
        (15, 11, 1),
    ];
    let mut counts = vec![vec![0u64; 16]; 16];
    for (k, &d) in diagonal.iter().enumerate() {
        counts[k][k] = d;
    }
    for (a, p, c) in off_diagonal {
        counts[a][p] = c;
    }
    ConfusionMatrix::from_counts(counts).unwrap()
}

pub const PUBLISHED_ACCURACY: f64 = 0.9580;

/// (REC, ACC, SPEC) of the five published metric rows.
pub const PUBLISHED_ROWS: [(f64, f64, f64); 5] = [
    (0.8457, 0.9807, 0.9897),
    (0.8457, 0.9807, 0.9897),
    (0.9376, 0.9922, 0.9958),
    (0.9400, 0.9925, 0.9960),
    (0.9458, 0.9932, 0.9964),
];

/// R_k as the correlation of the one-hot indicator matrices of actual and
/// predicted labels, expanded sample by sample.
pub fn brute_force_rk(cm: &ConfusionMatrix) -> f64 {
    let k = cm.n_classes();
    let mut samples = Vec::new();
    for a in 0..k {
        for p in 0..k {
            for _ in 0..cm.get(a, p) {
                samples.push((a, p));
            }
        }
    }
    let n = samples.len() as f64;
    let mut mean_x = vec![0.0; k];
    let mut mean_y = vec![0.0; k];
    for &(a, p) in &samples {
        mean_x[a] += 1.0 / n;
        mean_y[p] += 1.0 / n;
    }
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for &(a, p) in &samples {
        for j in 0..k {
            let x = if a == j { 1.0 } else { 0.0 } - mean_x[j];
            let y = if p == j { 1.0 } else { 0.0 } - mean_y[j];
            cxy += x * y;
            cxx += x * x;
            cyy += y * y;
        }
    }
    cxy / (cxx * cyy).sqrt()
}
