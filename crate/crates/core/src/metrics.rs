//! Confusion matrices, aggregate classification metrics, throughput, and
//! report rendering.
//!
//! With micro averaging over a single-label multiclass problem, recall,
//! precision, F1 and overall accuracy all equal `t = trace / N`. The
//! aggregate specificity and per-class accuracy follow from `t` alone:
//!
//! ```text
//! spec         = 1 − (1 − t) / (C − 1)
//! acc_perclass = 1 − 2(1 − t) / C
//! ```
//!
//! MCC is the multiclass R_k statistic over the full contingency table.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ClassLabel;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    Empty,
    #[error("{predicted} predictions for {actual} labels")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("wall time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("confusion matrix must be square with at least two classes")]
    Shape,
    #[error("no metric rows to report")]
    NoRows,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let n = counts.len();
        if n < 2 || counts.iter().any(|r| r.len() != n) {
            return Err(MetricsError::Shape);
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(
        predicted: &[usize],
        actual: &[usize],
        n_classes: usize,
    ) -> Result<Self, MetricsError> {
        if predicted.len() != actual.len() {
            return Err(MetricsError::LengthMismatch {
                predicted: predicted.len(),
                actual: actual.len(),
            });
        }
        if predicted.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut cm = Self::zeros(n_classes);
        for (&p, &a) in predicted.iter().zip(actual) {
            for label in [p, a] {
                if label >= n_classes {
                    return Err(MetricsError::LabelOutOfRange { label, n_classes });
                }
            }
            cm.counts[a][p] += 1;
        }
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        self.counts[actual].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    fn header_label(i: usize) -> String {
        ClassLabel::from_index(i).map_or_else(|| i.to_string(), |c| c.letter().to_string())
    }

    /// CSV with a header row and column of class letters.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.n_classes();
        let header: Vec<String> = (0..n).map(Self::header_label).collect();
        writeln!(out, "actual/predicted,{}", header.join(","))?;
        for (i, row) in self.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(out, "{},{}", header[i], cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, MetricsError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let n = reader.headers()?.len().saturating_sub(1);
        let mut counts = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            if record.len() != n + 1 {
                return Err(MetricsError::Format {
                    line,
                    message: format!("expected {} fields, got {}", n + 1, record.len()),
                });
            }
            let row = record
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MetricsError::Format {
                    line,
                    message: e.to_string(),
                })?;
            counts.push(row);
        }
        Self::from_counts(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub rec: f64,
    pub prec: f64,
    pub spec: f64,
    /// trace / N.
    pub acc_overall: f64,
    /// Mean over classes of one-vs-rest accuracy.
    pub acc_perclass: f64,
    pub mcc: f64,
    pub f1: f64,
    pub fps: Option<f64>,
}

impl MetricsRow {
    pub fn named(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    pub fn with_fps(mut self, fps: Option<f64>) -> Self {
        self.fps = fps;
        self
    }
}

/// One-vs-rest metrics for a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged metrics with the derived specificity and per-class
/// accuracy.
pub fn micro_metrics(cm: &ConfusionMatrix) -> Result<MetricsRow, MetricsError> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    let c = cm.n_classes() as f64;
    let t = cm.trace() as f64 / n as f64;
    Ok(MetricsRow {
        method: String::new(),
        rec: t,
        prec: t,
        spec: 1.0 - (1.0 - t) / (c - 1.0),
        acc_overall: t,
        acc_perclass: 1.0 - 2.0 * (1.0 - t) / c,
        mcc: mcc(cm),
        f1: t,
        fps: None,
    })
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    let n = cm.total();
    (0..cm.n_classes())
        .map(|k| {
            let tp = cm.get(k, k);
            let actual = cm.row_sum(k);
            let predicted = cm.col_sum(k);
            let fp = predicted - tp;
            let negatives = n - actual;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: ConfusionMatrix::header_label(k),
                support: actual,
                precision,
                recall,
                specificity: ratio(negatives - fp, negatives),
                f1,
            }
        })
        .collect()
}

/// Unweighted mean of per-class specificities.
pub fn macro_specificity(cm: &ConfusionMatrix) -> f64 {
    let per = per_class_metrics(cm);
    per.iter().map(|m| m.specificity).sum::<f64>() / per.len() as f64
}

/// Multiclass Matthews correlation (R_k). Degenerate marginals give 0.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let k = cm.n_classes();
    let s = cm.total() as f64;
    let c = cm.trace() as f64;
    let t: Vec<f64> = (0..k).map(|i| cm.row_sum(i) as f64).collect();
    let p: Vec<f64> = (0..k).map(|i| cm.col_sum(i) as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    if den == 0.0 || !den.is_finite() {
        return 0.0;
    }
    (c * s - pt) / den
}

/// Images per second; an empty run scores 0.
pub fn fps(n_images: usize, wall_seconds: f64) -> Result<f64, MetricsError> {
    if wall_seconds.is_nan() || wall_seconds <= 0.0 {
        return Err(MetricsError::NonPositiveTime(wall_seconds));
    }
    Ok(n_images as f64 / wall_seconds)
}

/// A published or expected overall accuracy to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAccuracy {
    pub label: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<MetricsRow>,
    pub confusion: ConfusionMatrix,
    pub trace: u64,
    pub total: u64,
    pub macro_specificity: f64,
    pub per_class: Vec<ClassMetrics>,
    pub reference: Option<ReferenceAccuracy>,
    /// Absolute difference between trace/N and the reference accuracy.
    pub reference_gap: Option<f64>,
}

impl Report {
    pub fn new(
        rows: Vec<MetricsRow>,
        confusion: ConfusionMatrix,
        reference: Option<ReferenceAccuracy>,
    ) -> Result<Self, MetricsError> {
        if rows.is_empty() {
            return Err(MetricsError::NoRows);
        }
        let total = confusion.total();
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        let trace = confusion.trace();
        let t = trace as f64 / total as f64;
        Ok(Self {
            reference_gap: reference.as_ref().map(|r| (t - r.accuracy).abs()),
            macro_specificity: macro_specificity(&confusion),
            per_class: per_class_metrics(&confusion),
            rows,
            confusion,
            trace,
            total,
            reference,
        })
    }

    pub fn markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("| Method | REC | PREC | SPEC | ACC | MCC | F1 | FPS |\n");
        s.push_str("|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let fps = r.fps.map_or_else(|| "-".to_string(), |v| format!("{v:.0}"));
            s.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |\n",
                r.method, r.rec, r.prec, r.spec, r.acc_overall, r.mcc, r.f1, fps
            ));
        }
        s.push_str("\nACC above is overall accuracy (trace / N). Mean one-vs-rest accuracy per class:\n\n");
        s.push_str("| Method | ACC (per class) |\n|---|---|\n");
        for r in &self.rows {
            s.push_str(&format!("| {} | {:.4} |\n", r.method, r.acc_perclass));
        }
        s.push_str(&format!(
            "\nConfusion matrix: trace {}, N {}, macro-averaged SPEC {:.4}.\n",
            self.trace, self.total, self.macro_specificity
        ));
        if let (Some(reference), Some(gap)) = (&self.reference, self.reference_gap) {
            s.push_str(&format!(
                "\nNote: trace / N = {:.4} differs from the reference accuracy {:.4} ({}) by {:.4}.\n",
                self.trace as f64 / self.total as f64,
                reference.accuracy,
                reference.label,
                gap
            ));
        }
        s.push_str("\n| Class | Support | PREC | REC | SPEC | F1 |\n|---|---|---|---|---|---|\n");
        for m in &self.per_class {
            s.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                m.class, m.support, m.precision, m.recall, m.specificity, m.f1
            ));
        }
        s
    }

    pub fn json(&self) -> Result<String, MetricsError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Writes `report.md`, `report.json` and `confusion.csv` into `dir`.
pub fn render_report(
    rows: Vec<MetricsRow>,
    cm: &ConfusionMatrix,
    reference: Option<ReferenceAccuracy>,
    dir: &Path,
) -> Result<Report, MetricsError> {
    let report = Report::new(rows, cm.clone(), reference)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.md"), report.markdown())?;
    std::fs::write(dir.join("report.json"), report.json()?)?;
    let mut csv = Vec::new();
    cm.write_csv(&mut csv)?;
    std::fs::write(dir.join("confusion.csv"), csv)?;
    Ok(report)
}
