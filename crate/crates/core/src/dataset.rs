//! Class-folder dataset discovery, stratified splitting and the
//! out-of-patient training-set policy.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::seeded_rng;

pub const NUM_CLASSES: usize = 16;

const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "blurry-nothing",
    "colon-clear",
    "dyed-lifted-polyps",
    "dyed-resection-margins",
    "esophagitis",
    "instruments",
    "normal-cecum",
    "normal-pylorus",
    "normal-z-line",
    "out-of-patient",
    "polyps",
    "retroflex-rectum",
    "retroflex-stomach",
    "stool-inclusions",
    "stool-plenty",
    "ulcerative-colitis",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown class directory `{0}`")]
    UnknownClass(String),
    #[error("no images found under {0}")]
    EmptyRoot(PathBuf),
    #[error("class `{0}` has no images")]
    EmptyClass(ClassLabel),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("distractor directory {0} contains no images")]
    EmptyDistractors(PathBuf),
    #[error("duplicate image id `{0}`")]
    DuplicateId(String),
    #[error("split file line {line}: {message}")]
    SplitFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One of the sixteen finding categories, A..P in the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub const OUT_OF_PATIENT: ClassLabel = ClassLabel(9);

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_CLASSES).then_some(ClassLabel(index as u8))
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CLASS_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| ClassLabel(i as u8))
    }

    pub fn from_letter(letter: char) -> Option<Self> {
        let i = (letter as u32).checked_sub('A' as u32)? as usize;
        Self::from_index(i)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        CLASS_NAMES[self.index()]
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn all() -> impl Iterator<Item = ClassLabel> {
        (0..NUM_CLASSES as u8).map(ClassLabel)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::from_name(s).ok_or_else(|| DatasetError::UnknownClass(s.to_string()))
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        ClassLabel::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown class `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub label: ClassLabel,
}

#[derive(Debug, Clone)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: Vec<IndexEntry>,
    /// Class directories that were present under the root, even if empty.
    pub classes_present: Vec<ClassLabel>,
}

impl DatasetIndex {
    pub fn count(&self, label: ClassLabel) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }
}

/// Returns true when the file starts with a PNG or JPEG signature.
fn looks_like_image(path: &Path) -> bool {
    let mut head = [0u8; 8];
    let Ok(mut file) = fs::File::open(path) else {
        return false;
    };
    let n = file.read(&mut head).unwrap_or(0);
    matches!(
        image::guess_format(&head[..n]),
        Ok(image::ImageFormat::Png | image::ImageFormat::Jpeg)
    )
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && looks_like_image(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Index every PNG/JPEG image under `root/<class-name>/`.
///
/// Entries come out sorted by image id (`<class>/<file>`), so the index does
/// not depend on directory iteration order.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex, DatasetError> {
    let mut class_dirs = Vec::new();
    for entry in fs::read_dir(root)? {
        let path = entry?.path();
        if !path.is_dir() {
            continue;
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let label =
            ClassLabel::from_name(&name).ok_or_else(|| DatasetError::UnknownClass(name.clone()))?;
        class_dirs.push((name, label, path));
    }
    class_dirs.sort();

    let mut entries = Vec::new();
    let mut classes_present = Vec::new();
    for (name, label, dir) in class_dirs {
        classes_present.push(label);
        for path in image_files(&dir)? {
            let file = path.file_name().unwrap().to_string_lossy();
            entries.push(IndexEntry {
                image_id: format!("{name}/{file}"),
                path,
                label,
            });
        }
    }
    if entries.is_empty() {
        return Err(DatasetError::EmptyRoot(root.to_path_buf()));
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        entries,
        classes_present,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    Val,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Train => "train",
            Subset::Val => "val",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitEntry {
    pub image_id: String,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Vec<SplitEntry>,
    pub val: Vec<SplitEntry>,
    pub seed: u64,
    pub ratio: f64,
}

impl SplitPair {
    pub fn count(&self, subset: Subset, label: ClassLabel) -> usize {
        let side = match subset {
            Subset::Train => &self.train,
            Subset::Val => &self.val,
        };
        side.iter().filter(|e| e.label == label).count()
    }

    /// All rows as (entry, subset), sorted by image id.
    pub fn rows(&self) -> Vec<(&SplitEntry, Subset)> {
        let mut rows: Vec<_> = self
            .train
            .iter()
            .map(|e| (e, Subset::Train))
            .chain(self.val.iter().map(|e| (e, Subset::Val)))
            .collect();
        rows.sort_by(|a, b| a.0.image_id.cmp(&b.0.image_id));
        rows
    }

    pub fn labels(&self) -> BTreeMap<String, ClassLabel> {
        self.train
            .iter()
            .chain(&self.val)
            .map(|e| (e.image_id.clone(), e.label))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["image_id", "label", "subset"])?;
        for (entry, subset) in self.rows() {
            w.write_record([entry.image_id.as_str(), entry.label.name(), subset.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let file = fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parse a split CSV. The seed and ratio are not stored in the file and
    /// come back as zero.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, DatasetError> {
        let mut r = csv::ReaderBuilder::new().from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["image_id", "label", "subset"] {
            return Err(DatasetError::SplitFormat {
                line: 1,
                message: "expected header `image_id,label,subset`".into(),
            });
        }
        let mut split = SplitPair {
            train: Vec::new(),
            val: Vec::new(),
            seed: 0,
            ratio: 0.0,
        };
        let mut seen = std::collections::HashSet::new();
        for (i, record) in r.records().enumerate() {
            let line = i + 2;
            let record = record?;
            let bad = |message: String| DatasetError::SplitFormat { line, message };
            if record.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", record.len())));
            }
            let label = ClassLabel::from_name(&record[1])
                .ok_or_else(|| bad(format!("unknown class `{}`", &record[1])))?;
            let entry = SplitEntry {
                image_id: record[0].to_string(),
                label,
            };
            if !seen.insert(entry.image_id.clone()) {
                return Err(DatasetError::DuplicateId(entry.image_id));
            }
            match &record[2] {
                "train" => split.train.push(entry),
                "val" => split.val.push(entry),
                other => return Err(bad(format!("unknown subset `{other}`"))),
            }
        }
        Ok(split)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::read_csv(fs::File::open(path)?)
    }
}

/// Number of training items for a class of `count` images: `ratio · count`
/// rounded half up.
pub fn train_count(count: usize, ratio: f64) -> usize {
    ((ratio * count as f64) + 0.5).floor() as usize
}

/// Per-class shuffled split. Classes are visited in label order and share one
/// seeded generator, so the result depends only on (index, ratio, seed).
pub fn stratified_split(
    index: &DatasetIndex,
    ratio: f64,
    seed: u64,
) -> Result<SplitPair, DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    let mut by_class: BTreeMap<ClassLabel, Vec<&IndexEntry>> = BTreeMap::new();
    for &label in &index.classes_present {
        by_class.entry(label).or_default();
    }
    for entry in &index.entries {
        by_class.entry(entry.label).or_default().push(entry);
    }

    let mut rng = seeded_rng(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (label, mut members) in by_class {
        if members.is_empty() {
            return Err(DatasetError::EmptyClass(label));
        }
        members.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        members.shuffle(&mut rng);
        let n_train = train_count(members.len(), ratio);
        for (i, e) in members.into_iter().enumerate() {
            let entry = SplitEntry {
                image_id: e.image_id.clone(),
                label: e.label,
            };
            if i < n_train {
                train.push(entry);
            } else {
                val.push(entry);
            }
        }
    }
    Ok(SplitPair {
        train,
        val,
        seed,
        ratio,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicySummary {
    pub moved_to_val: usize,
    pub distractors_added: usize,
    pub class_missing: bool,
}

/// Move every out-of-patient image into the validation half and optionally
/// refill the training half with distractor images.
///
/// Distractor ids are their absolute paths, so downstream tools can locate
/// them independently of the dataset root. Without distractors the training
/// half simply holds no out-of-patient examples.
pub fn apply_out_of_patient_policy(
    split: &SplitPair,
    distractor_dir: Option<&Path>,
) -> Result<(SplitPair, PolicySummary), DatasetError> {
    let oop = ClassLabel::OUT_OF_PATIENT;
    let has_class = split.train.iter().chain(&split.val).any(|e| e.label == oop);
    if !has_class {
        log::warn!("split contains no `{oop}` images; out-of-patient policy not applied");
        return Ok((
            split.clone(),
            PolicySummary {
                class_missing: true,
                ..Default::default()
            },
        ));
    }

    let distractors = match distractor_dir {
        Some(dir) => {
            let files = image_files(dir)?;
            if files.is_empty() {
                return Err(DatasetError::EmptyDistractors(dir.to_path_buf()));
            }
            files
                .into_iter()
                .map(|p| fs::canonicalize(&p).unwrap_or(p))
                .collect()
        }
        None => Vec::new(),
    };

    let mut out = split.clone();
    let (moved, kept): (Vec<_>, Vec<_>) = out.train.drain(..).partition(|e| e.label == oop);
    out.train = kept;
    out.val.extend(moved.iter().cloned());

    let existing: std::collections::HashSet<_> =
        out.train.iter().chain(&out.val).map(|e| e.image_id.clone()).collect();
    let mut added = 0;
    for path in distractors {
        let image_id = path.to_string_lossy().into_owned();
        if existing.contains(&image_id) {
            return Err(DatasetError::DuplicateId(image_id));
        }
        out.train.push(SplitEntry {
            image_id,
            label: oop,
        });
        added += 1;
    }
    log::info!(
        "out-of-patient policy: {} moved to val, {} distractors added to train",
        moved.len(),
        added
    );
    Ok((
        out,
        PolicySummary {
            moved_to_val: moved.len(),
            distractors_added: added,
            class_missing: false,
        },
    ))
}
