//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;

use gitract_core::classifiers::{GfModel, LogisticModelTree, SimpleLogistic, TrainConfig};
use gitract_core::dataset::{
    apply_out_of_patient_policy, scan_dataset, stratified_split, SplitEntry, SplitPair, NUM_CLASSES,
};
use gitract_core::descriptors::{
    self, auto_color_correlogram, color_layout, edge_histogram, extract_all, jcd, phog, tamura,
    FeatureRow, STANDARD_SIZE,
};
use gitract_core::fusion::{
    build_fusion_mlp, import_branch_probs, predict_average, predict_mlp, read_predictions_csv,
    train_fusion, write_predictions_csv, BranchOutputs, Prediction, ProbabilityVector,
};
use gitract_core::imaging::{self, ImageTensor};
use gitract_core::metrics::{self, render_report, ConfusionMatrix, ReferenceAccuracy};
use gitract_core::nnet::{write_history_csv, FitConfig, ScheduleConfig};

use crate::args::{
    required, BenchArgs, ClassifierKind, EvaluateArgs, ExtractArgs, FuseArgs, FusionMode,
    PredictArgs, SplitArgs, SubsetChoice, TrainArgs, DEFAULT_SEED,
};
use crate::{CliError, CliResult};

const DEFAULT_RATIO: f64 = 0.7;

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    match threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => builder = builder.num_threads(n),
        None => {}
    }
    Ok(builder.build()?)
}

fn read_features(path: &Path) -> anyhow::Result<Vec<FeatureRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    descriptors::read_feature_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

fn load_split(path: &Path) -> anyhow::Result<SplitPair> {
    SplitPair::load(path).with_context(|| format!("reading split {}", path.display()))
}

fn subset_entries(split: &SplitPair, subset: SubsetChoice) -> Vec<&SplitEntry> {
    match subset {
        SubsetChoice::Train => split.train.iter().collect(),
        SubsetChoice::Val => split.val.iter().collect(),
        SubsetChoice::All => split.train.iter().chain(&split.val).collect(),
    }
}

pub fn split(a: SplitArgs) -> CliResult<()> {
    let root = required(a.root, "root")?;
    let ratio = a.ratio.unwrap_or(DEFAULT_RATIO);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CliError::Usage(format!(
            "--ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let out = a.out.unwrap_or_else(|| PathBuf::from("split.csv"));

    let index = scan_dataset(&root).with_context(|| format!("scanning {}", root.display()))?;
    let split = stratified_split(&index, ratio, seed)?;
    let (split, policy) = apply_out_of_patient_policy(&split, a.distractors.as_deref())?;
    split.save(&out)?;

    println!(
        "split {} images from {} classes: {} train, {} val (seed {seed}, ratio {ratio})",
        index.entries.len(),
        index.classes_present.len(),
        split.train.len(),
        split.val.len()
    );
    if !policy.class_missing {
        println!(
            "out-of-patient: {} moved to val, {} distractors in train",
            policy.moved_to_val, policy.distractors_added
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Resample to the standard size used by every descriptor.
fn standardize(img: &ImageTensor) -> anyhow::Result<ImageTensor> {
    if img.width() == STANDARD_SIZE && img.height() == STANDARD_SIZE {
        return Ok(img.clone());
    }
    Ok(imaging::resize_bilinear(img, STANDARD_SIZE, STANDARD_SIZE)?)
}

fn image_path(root: &Path, image_id: &str) -> PathBuf {
    let id = Path::new(image_id);
    if id.is_absolute() {
        id.to_path_buf()
    } else {
        root.join(id)
    }
}

fn dump_name(image_id: &str) -> String {
    let stem: String = image_id
        .trim_start_matches('/')
        .chars()
        .map(|c| if c == '/' || c == '\\' { '_' } else { c })
        .collect();
    format!("{stem}.png")
}

pub fn extract(a: ExtractArgs) -> CliResult<()> {
    let split_path = required(a.split, "split")?;
    let root = a.root.unwrap_or_else(|| PathBuf::from("."));
    let out = a.out.unwrap_or_else(|| PathBuf::from("features.csv"));
    let pool = thread_pool(a.threads)?;
    let split = load_split(&split_path)?;
    if let Some(dir) = &a.dump_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let entries: Vec<&SplitEntry> = split.rows().into_iter().map(|(e, _)| e).collect();
    let started = Instant::now();
    let results: Vec<anyhow::Result<FeatureRow>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let path = image_path(&root, &entry.image_id);
                let img = imaging::decode_file(&path)?;
                let standard = standardize(&img)?;
                if let Some(dir) = &a.dump_dir {
                    fs::write(dir.join(dump_name(&entry.image_id)), standard.encode_png()?)?;
                }
                Ok(FeatureRow {
                    image_id: entry.image_id.clone(),
                    label: entry.label,
                    features: extract_all(&standard)?,
                })
            })
            .collect()
    });
    let seconds = started.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("skipping {}: {e:#}", entry.image_id);
                skipped += 1;
            }
        }
    }
    if rows.is_empty() {
        return Err(anyhow::anyhow!("no image could be processed ({skipped} skipped)").into());
    }
    let mut w = create(&out)?;
    descriptors::write_feature_csv(&mut w, &rows)?;
    w.flush()?;

    println!("extracted {} images, {skipped} skipped", rows.len());
    if let Ok(fps) = metrics::fps(rows.len(), seconds) {
        eprintln!("throughput: {fps:.1} images/s");
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Feature rows keyed by id, checked against the split labels.
fn rows_by_id(rows: Vec<FeatureRow>, split: &SplitPair) -> anyhow::Result<BTreeMap<String, FeatureRow>> {
    let labels = split.labels();
    let mut by_id = BTreeMap::new();
    for row in rows {
        if let Some(&label) = labels.get(&row.image_id) {
            if label != row.label {
                bail!(
                    "{}: feature file says {} but split says {}",
                    row.image_id,
                    row.label,
                    label
                );
            }
        }
        by_id.insert(row.image_id.clone(), row);
    }
    Ok(by_id)
}

fn gather<'a>(
    by_id: &'a BTreeMap<String, FeatureRow>,
    entries: &[SplitEntry],
    what: &str,
) -> anyhow::Result<(Vec<&'a FeatureRow>, Vec<String>)> {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for e in entries {
        match by_id.get(&e.image_id) {
            Some(row) => found.push(row),
            None => missing.push(e.image_id.clone()),
        }
    }
    if found.is_empty() {
        bail!("no {what} rows of the split have features");
    }
    Ok((found, missing))
}

fn probabilities(model: &GfModel, rows: &[&FeatureRow]) -> anyhow::Result<BranchOutputs> {
    let mut out = BranchOutputs::new(model.name());
    for row in rows {
        let p = model.predict_proba(row.features.values())?;
        out.probs.insert(row.image_id.clone(), ProbabilityVector::new(&p)?);
    }
    Ok(out)
}

fn predictions_of(probs: &BranchOutputs, ids: &[&str]) -> Vec<Prediction> {
    ids.iter()
        .map(|id| {
            let p = &probs.probs[*id];
            Prediction {
                image_id: id.to_string(),
                label: p.argmax(),
                confidence: p.max(),
            }
        })
        .collect()
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let features = required(a.features, "features")?;
    let split_path = required(a.split, "split")?;
    let classifier = required(a.classifier, "classifier")?;
    let model_path = a.model.unwrap_or_else(|| PathBuf::from("model.json"));
    let report_dir = a.report_dir.unwrap_or_else(|| PathBuf::from("report"));
    let mut cfg = TrainConfig {
        n_classes: NUM_CLASSES,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        ..Default::default()
    };
    if let Some(n) = a.max_iterations {
        cfg.max_iterations = n;
    }

    let split = load_split(&split_path)?;
    let by_id = rows_by_id(read_features(&features)?, &split)?;
    let (train_rows, missing) = gather(&by_id, &split.train, "train")?;
    if !missing.is_empty() {
        log::warn!("{} training images have no features and are left out", missing.len());
    }
    let (val_rows, missing) = gather(&by_id, &split.val, "val")?;
    if !missing.is_empty() {
        log::warn!("{} validation images have no features and are left out", missing.len());
    }

    let x: Vec<Vec<f64>> = train_rows.iter().map(|r| r.features.values().to_vec()).collect();
    let y: Vec<usize> = train_rows.iter().map(|r| r.label.index()).collect();
    let started = Instant::now();
    let (model, method) = match classifier {
        ClassifierKind::Sl => (GfModel::SimpleLogistic(SimpleLogistic::train(&x, &y, &cfg)?), "SimpleLogistic"),
        ClassifierKind::Lmt => (GfModel::Lmt(LogisticModelTree::train(&x, &y, &cfg)?), "LMT"),
    };
    log::info!("trained {method} in {:.1}s", started.elapsed().as_secs_f64());
    match &model {
        GfModel::SimpleLogistic(m) => log::info!("{} boosting iterations", m.n_iterations),
        GfModel::Lmt(t) => log::info!(
            "{} boosting iterations, {} leaves, depth {}",
            t.n_iterations,
            t.n_leaves(),
            t.depth()
        ),
    }
    if let Some(parent) = model_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    model.save(&model_path)?;

    let probs = probabilities(&model, &val_rows)?;
    let ids: Vec<&str> = val_rows.iter().map(|r| r.image_id.as_str()).collect();
    let predictions = predictions_of(&probs, &ids);
    let predicted: Vec<usize> = predictions.iter().map(|p| p.label).collect();
    let actual: Vec<usize> = val_rows.iter().map(|r| r.label.index()).collect();
    let cm = ConfusionMatrix::from_predictions(&predicted, &actual, NUM_CLASSES)?;
    let row = metrics::micro_metrics(&cm)?.named(method);
    render_report(vec![row], &cm, None, &report_dir)?;

    if let Some(path) = &a.predictions_out {
        let mut w = create(path)?;
        write_predictions_csv(&mut w, &predictions)?;
        w.flush()?;
    }
    if let Some(path) = &a.probs_out {
        let mut w = create(path)?;
        probs.write_csv(&mut w)?;
        w.flush()?;
    }

    println!(
        "{method}: validation accuracy {:.4} ({}/{})",
        cm.trace() as f64 / cm.total() as f64,
        cm.trace(),
        cm.total()
    );
    println!("wrote {} and {}", model_path.display(), report_dir.display());
    Ok(())
}

fn labelled(entries: &[SplitEntry]) -> Vec<(&str, usize)> {
    entries.iter().map(|e| (e.image_id.as_str(), e.label.index())).collect()
}

pub fn fuse(a: FuseArgs) -> CliResult<()> {
    let b1_path = required(a.branch1, "branch1")?;
    let b2_path = required(a.branch2, "branch2")?;
    let mode = required(a.mode, "mode")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("predictions.csv"));
    let split = match &a.labels {
        Some(path) => Some(load_split(path)?),
        None if mode == FusionMode::Mlp => {
            return Err(CliError::Usage("--mode mlp needs --labels to train on".into()))
        }
        None => None,
    };
    let b1 = import_branch_probs(&b1_path)?;
    let b2 = import_branch_probs(&b2_path)?;

    let targets: Vec<(&str, usize)> = match &split {
        Some(s) => labelled(&s.val),
        None => Vec::new(),
    };
    let ids: Vec<&str> = match &split {
        Some(_) => targets.iter().map(|(id, _)| *id).collect(),
        None => b1.probs.keys().map(String::as_str).collect(),
    };

    let (predictions, method) = match mode {
        FusionMode::Avg => (predict_average(&b1, &b2, &ids)?, "Average fusion"),
        FusionMode::Mlp => {
            let split = split.as_ref().expect("checked above");
            let defaults = FitConfig::default();
            let cfg = FitConfig {
                epochs: a.epochs.unwrap_or(defaults.epochs),
                batch_size: a.batch_size.unwrap_or(defaults.batch_size),
                momentum: a.momentum.unwrap_or(defaults.momentum),
                schedule: ScheduleConfig {
                    initial_lr: a.lr.unwrap_or(defaults.schedule.initial_lr),
                    factor: a.lr_factor.unwrap_or(defaults.schedule.factor),
                    patience: a.lr_patience.unwrap_or(defaults.schedule.patience),
                    min_lr: a.min_lr.unwrap_or(defaults.schedule.min_lr),
                },
                seed: a.seed.unwrap_or(DEFAULT_SEED),
            };
            let mlp = build_fusion_mlp(cfg.seed);
            let outcome = train_fusion(&mlp, &b1, &b2, &labelled(&split.train), &targets, &cfg)?;
            if let (Some(epoch), Some(acc)) = (outcome.best_epoch, outcome.best_val_acc) {
                log::info!("best validation accuracy {acc:.4} at epoch {epoch}");
            }
            if let Some(path) = &a.history {
                let mut w = create(path)?;
                write_history_csv(&mut w, &outcome.history)?;
                w.flush()?;
            }
            if let Some(path) = &a.mlp_out {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(parent)?;
                }
                outcome.best.save(path)?;
            }
            (predict_mlp(&outcome.best, &b1, &b2, &ids)?, "MLP fusion")
        }
    };

    let mut w = create(&out)?;
    write_predictions_csv(&mut w, &predictions)?;
    w.flush()?;

    if split.is_some() {
        let predicted: Vec<usize> = predictions.iter().map(|p| p.label).collect();
        let actual: Vec<usize> = targets.iter().map(|(_, l)| *l).collect();
        let cm = ConfusionMatrix::from_predictions(&predicted, &actual, NUM_CLASSES)?;
        if let Some(dir) = &a.report_dir {
            let row = metrics::micro_metrics(&cm)?.named(method);
            render_report(vec![row], &cm, None, dir)?;
        }
        println!(
            "{method}: validation accuracy {:.4} ({}/{})",
            cm.trace() as f64 / cm.total() as f64,
            cm.trace(),
            cm.total()
        );
    } else {
        println!("{method}: fused {} images", predictions.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn predict(a: PredictArgs) -> CliResult<()> {
    let model_path = required(a.model, "model")?;
    let features = required(a.features, "features")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("predictions.csv"));
    if a.subset.is_some() && a.split.is_none() {
        return Err(CliError::Usage("--subset needs --split".into()));
    }
    let model = GfModel::load(&model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let mut rows = read_features(&features)?;
    if let Some(path) = &a.split {
        let split = load_split(path)?;
        let keep: BTreeMap<&str, ()> = subset_entries(&split, a.subset.unwrap_or(SubsetChoice::All))
            .into_iter()
            .map(|e| (e.image_id.as_str(), ()))
            .collect();
        rows.retain(|r| keep.contains_key(r.image_id.as_str()));
    }
    if rows.is_empty() {
        return Err(anyhow::anyhow!("no feature rows to predict").into());
    }
    let refs: Vec<&FeatureRow> = rows.iter().collect();
    let probs = probabilities(&model, &refs)?;
    let ids: Vec<&str> = rows.iter().map(|r| r.image_id.as_str()).collect();
    let predictions = predictions_of(&probs, &ids);

    let mut w = create(&out)?;
    write_predictions_csv(&mut w, &predictions)?;
    w.flush()?;
    if let Some(path) = &a.probs_out {
        let mut w = create(path)?;
        probs.write_csv(&mut w)?;
        w.flush()?;
    }
    println!("predicted {} images with {}", predictions.len(), model.name());
    println!("wrote {}", out.display());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let predictions_path = required(a.predictions, "predictions")?;
    let labels_path = required(a.labels, "labels")?;
    let report_dir = a.report_dir.unwrap_or_else(|| PathBuf::from("report"));
    let method = a.method.unwrap_or_else(|| "predictions".to_string());
    let subset = a.subset.unwrap_or(SubsetChoice::Val);
    let reference = match a.reference_accuracy {
        Some(acc) if !(0.0..=1.0).contains(&acc) => {
            return Err(CliError::Usage(format!("--reference-accuracy must lie in [0, 1], got {acc}")))
        }
        Some(accuracy) => Some(ReferenceAccuracy {
            label: a.reference_label.unwrap_or_else(|| "reference".to_string()),
            accuracy,
        }),
        None => None,
    };

    let split = load_split(&labels_path)?;
    let all_labels = split.labels();
    let file = File::open(&predictions_path)
        .with_context(|| format!("opening {}", predictions_path.display()))?;
    let predictions = read_predictions_csv(BufReader::new(file))
        .with_context(|| format!("reading {}", predictions_path.display()))?;
    let mut predicted_by_id = BTreeMap::new();
    for p in &predictions {
        if !all_labels.contains_key(&p.image_id) {
            return Err(anyhow::anyhow!("prediction for {} has no label in {}", p.image_id, labels_path.display()).into());
        }
        if predicted_by_id.insert(p.image_id.as_str(), p.label).is_some() {
            return Err(anyhow::anyhow!("duplicate prediction for {}", p.image_id).into());
        }
    }

    let entries = subset_entries(&split, subset);
    let missing: Vec<&str> = entries
        .iter()
        .filter(|e| !predicted_by_id.contains_key(e.image_id.as_str()))
        .map(|e| e.image_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(anyhow::anyhow!(
            "{} labelled image(s) have no prediction, e.g. {}",
            missing.len(),
            missing[0]
        )
        .into());
    }
    let predicted: Vec<usize> = entries.iter().map(|e| predicted_by_id[e.image_id.as_str()]).collect();
    let actual: Vec<usize> = entries.iter().map(|e| e.label.index()).collect();
    let cm = ConfusionMatrix::from_predictions(&predicted, &actual, NUM_CLASSES)?;
    let row = metrics::micro_metrics(&cm)?.named(method.clone()).with_fps(a.fps);
    let report = render_report(vec![row], &cm, reference, &report_dir)?;

    println!(
        "{method}: accuracy {:.4} ({}/{}), MCC {:.4}",
        report.trace as f64 / report.total as f64,
        report.trace,
        report.total,
        report.rows[0].mcc
    );
    if let (Some(r), Some(gap)) = (&report.reference, report.reference_gap) {
        println!("reference {} {:.4}, gap {gap:.4}", r.label, r.accuracy);
    }
    println!("wrote {}", report_dir.display());
    Ok(())
}

type Descriptor = fn(&ImageTensor) -> Result<Vec<f64>, descriptors::DescriptorError>;

pub fn bench(a: BenchArgs) -> CliResult<()> {
    let split_path = required(a.split, "split")?;
    let root = a.root.unwrap_or_else(|| PathBuf::from("."));
    let pool = thread_pool(a.threads)?;
    let split = load_split(&split_path)?;
    let limit = a.limit.unwrap_or(usize::MAX);
    if limit == 0 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }

    let mut images = Vec::new();
    for (entry, _) in split.rows().into_iter().take(limit) {
        match imaging::decode_file(&image_path(&root, &entry.image_id)).map_err(anyhow::Error::from).and_then(|i| standardize(&i)) {
            Ok(img) => images.push(img),
            Err(e) => log::warn!("skipping {}: {e:#}", entry.image_id),
        }
    }
    if images.is_empty() {
        return Err(anyhow::anyhow!("no image could be decoded").into());
    }

    let descriptors: [(&str, Descriptor); 6] = [
        ("tamura", tamura),
        ("color_layout", color_layout),
        ("edge_histogram", edge_histogram),
        ("auto_color_correlogram", auto_color_correlogram),
        ("phog", phog),
        ("jcd", jcd),
    ];
    let mut timings = BTreeMap::new();
    let mut total = 0.0;
    for (name, f) in descriptors {
        let started = Instant::now();
        pool.install(|| images.par_iter().map(f).collect::<Result<Vec<_>, _>>())?;
        let seconds = started.elapsed().as_secs_f64();
        total += seconds;
        let fps = metrics::fps(images.len(), seconds).unwrap_or(f64::INFINITY);
        println!("{name:<24} {seconds:>9.3}s {fps:>10.1} images/s");
        timings.insert(name.to_string(), serde_json::json!({ "seconds": seconds, "fps": fps }));
    }
    let overall = metrics::fps(images.len(), total).unwrap_or(f64::INFINITY);
    println!("{:<24} {total:>9.3}s {overall:>10.1} images/s", "all descriptors");

    if let Some(path) = &a.out {
        let summary = serde_json::json!({
            "images": images.len(),
            "descriptors": timings,
            "total_seconds": total,
            "fps": overall,
        });
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}
