//! The six global image descriptors and their 702-value concatenation.
//!
//! | segment          | range        | length |
//! |------------------|--------------|--------|
//! | Tamura           | `0..18`      | 18     |
//! | Color layout     | `18..30`     | 12     |
//! | Edge histogram   | `30..110`    | 80     |
//! | Auto correlogram | `110..366`   | 256    |
//! | PHOG             | `366..534`   | 168    |
//! | JCD              | `534..702`   | 168    |
//!
//! Every descriptor is a pure function of the pixels. Degenerate inputs
//! (no gradients, no edges) yield zero histograms instead of NaN.

mod color_layout;
mod correlogram;
mod edge;
mod jcd;
mod phog;
mod tamura;

use std::io::{Read, Write};
use std::ops::Range;

use thiserror::Error;

use crate::dataset::ClassLabel;
use crate::imaging::{self, ImageTensor, ImagingError};
use crate::util::format_sig;

pub use color_layout::color_layout;
pub use correlogram::{auto_color_correlogram, quantize_hsv};
pub use edge::{classify_block, edge_histogram, EdgeKind, EDGE_THRESHOLD};
pub use jcd::{fuzzy_color, jcd, TextureArea};
pub use phog::phog;
pub use tamura::{tamura, tamura_coarseness, tamura_contrast, tamura_directionality};

pub const FEATURE_DIM: usize = 702;
/// Side length every image is resampled to before extraction.
pub const STANDARD_SIZE: usize = 512;

pub const TAMURA: Range<usize> = 0..18;
pub const COLOR_LAYOUT: Range<usize> = 18..30;
pub const EDGE_HIST: Range<usize> = 30..110;
pub const ACC: Range<usize> = 110..366;
pub const PHOG: Range<usize> = 366..534;
pub const JCD: Range<usize> = 534..702;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("{descriptor} needs at least {min_w}x{min_h} pixels, got {w}x{h}")]
    TooSmall {
        descriptor: &'static str,
        min_w: usize,
        min_h: usize,
        w: usize,
        h: usize,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("feature file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn require_size(
    descriptor: &'static str,
    img: &ImageTensor,
    min_w: usize,
    min_h: usize,
) -> Result<(), DescriptorError> {
    if img.width() < min_w || img.height() < min_h {
        return Err(DescriptorError::TooSmall {
            descriptor,
            min_w,
            min_h,
            w: img.width(),
            h: img.height(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DescriptorError> {
        if values.len() != FEATURE_DIM {
            return Err(DescriptorError::Format {
                line: 0,
                message: format!("expected {FEATURE_DIM} values, got {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DescriptorError::Format {
                line: 0,
                message: "non-finite feature value".into(),
            });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn tamura(&self) -> &[f64] {
        &self.0[TAMURA]
    }

    pub fn color_layout(&self) -> &[f64] {
        &self.0[COLOR_LAYOUT]
    }

    pub fn edge_histogram(&self) -> &[f64] {
        &self.0[EDGE_HIST]
    }

    pub fn correlogram(&self) -> &[f64] {
        &self.0[ACC]
    }

    pub fn phog(&self) -> &[f64] {
        &self.0[PHOG]
    }

    pub fn jcd(&self) -> &[f64] {
        &self.0[JCD]
    }
}

/// Resample to 512×512 (if needed) and compute all six descriptors.
pub fn extract_all(img: &ImageTensor) -> Result<FeatureVector, DescriptorError> {
    let img = if img.width() == STANDARD_SIZE && img.height() == STANDARD_SIZE {
        img.clone()
    } else {
        imaging::resize_bilinear(img, STANDARD_SIZE, STANDARD_SIZE)?
    };
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend(tamura(&img)?);
    values.extend(color_layout(&img)?);
    values.extend(edge_histogram(&img)?);
    values.extend(auto_color_correlogram(&img)?);
    values.extend(phog(&img)?);
    values.extend(jcd(&img)?);
    FeatureVector::new(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub image_id: String,
    pub label: ClassLabel,
    pub features: FeatureVector,
}

fn feature_header() -> Vec<String> {
    let mut header = vec!["image_id".to_string(), "label".to_string()];
    header.extend((0..FEATURE_DIM).map(|i| format!("f{i:03}")));
    header
}

/// Write rows as `image_id,label,f000..f701` with 9 significant digits.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<(), DescriptorError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(feature_header())?;
    for row in rows {
        let mut record = Vec::with_capacity(FEATURE_DIM + 2);
        record.push(row.image_id.clone());
        record.push(row.label.name().to_string());
        record.extend(row.features.values().iter().map(|&v| format_sig(v, 9)));
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, DescriptorError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != feature_header() {
        return Err(DescriptorError::Format {
            line: 1,
            message: "expected header `image_id,label,f000..f701`".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let bad = |message: String| DescriptorError::Format { line, message };
        if record.len() != FEATURE_DIM + 2 {
            return Err(bad(format!("expected {} fields", FEATURE_DIM + 2)));
        }
        let label = ClassLabel::from_name(&record[1])
            .ok_or_else(|| bad(format!("unknown class `{}`", &record[1])))?;
        let values = record
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let features = FeatureVector::new(values).map_err(|e| bad(e.to_string()))?;
        rows.push(FeatureRow {
            image_id: record[0].to_string(),
            label,
            features,
        });
    }
    Ok(rows)
}
