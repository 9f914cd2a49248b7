use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{softmax, validate_training, ClassifierError, Standardizer, TrainConfig};
use crate::util::{argmax, seeded_rng};

const Z_MAX: f64 = 3.0;

/// One additive piece of a class score: `intercept + slope · x[attribute]`
/// on standardized features. Intercept-only terms carry `slope == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StumpTerm {
    pub class: usize,
    pub attribute: usize,
    pub intercept: f64,
    pub slope: f64,
}

impl StumpTerm {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.slope * x[self.attribute]
    }
}

/// Standardized training rows stored column-major.
pub(crate) struct Columns {
    pub n_rows: usize,
    pub cols: Vec<Vec<f64>>,
}

impl Columns {
    pub fn gather(rows: &[Vec<f64>], subset: &[usize]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let cols = (0..d)
            .map(|a| subset.iter().map(|&r| rows[r][a]).collect())
            .collect();
        Self {
            n_rows: subset.len(),
            cols,
        }
    }
}

/// LogitBoost state over a fixed set of rows: class scores per row.
pub(crate) struct Booster<'a> {
    data: &'a Columns,
    labels: Vec<usize>,
    usable: &'a [bool],
    n_classes: usize,
    scores: Vec<f64>,
}

impl<'a> Booster<'a> {
    pub fn new(
        data: &'a Columns,
        labels: Vec<usize>,
        usable: &'a [bool],
        n_classes: usize,
        initial_scores: Option<Vec<f64>>,
    ) -> Self {
        let scores = initial_scores.unwrap_or_else(|| vec![0.0; data.n_rows * n_classes]);
        debug_assert_eq!(scores.len(), data.n_rows * n_classes);
        Self {
            data,
            labels,
            usable,
            n_classes,
            scores,
        }
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    /// One boosting round: per class, the single-attribute weighted
    /// least-squares fit to the working response, scaled by (J − 1)/J.
    pub fn step(&mut self) -> Vec<StumpTerm> {
        let j_count = self.n_classes;
        let n = self.data.n_rows;
        let mut w = vec![0.0; n * j_count];
        let mut wz = vec![0.0; n * j_count];
        let mut sw = vec![0.0; j_count];
        let mut swz = vec![0.0; j_count];
        let mut swzz = vec![0.0; j_count];
        for r in 0..n {
            let p = softmax(&self.scores[r * j_count..(r + 1) * j_count]);
            for j in 0..j_count {
                let y = if self.labels[r] == j { 1.0 } else { 0.0 };
                let z = if y == 1.0 { 1.0 / p[j] } else { -1.0 / (1.0 - p[j]) };
                let z = z.clamp(-Z_MAX, Z_MAX);
                let weight = (y - p[j]) / z;
                w[r * j_count + j] = weight;
                wz[r * j_count + j] = weight * z;
                sw[j] += weight;
                swz[j] += weight * z;
                swzz[j] += weight * z * z;
            }
        }

        // (gain, attribute, slope, intercept) per class
        let mut best: Vec<Option<(f64, usize, f64, f64)>> = vec![None; j_count];
        let mut swx = vec![0.0; j_count];
        let mut swxx = vec![0.0; j_count];
        let mut swxz = vec![0.0; j_count];
        for (a, col) in self.data.cols.iter().enumerate() {
            if !self.usable[a] {
                continue;
            }
            swx.iter_mut().for_each(|v| *v = 0.0);
            swxx.iter_mut().for_each(|v| *v = 0.0);
            swxz.iter_mut().for_each(|v| *v = 0.0);
            for (r, &x) in col.iter().enumerate() {
                let wr = &w[r * j_count..(r + 1) * j_count];
                let wzr = &wz[r * j_count..(r + 1) * j_count];
                let xx = x * x;
                for j in 0..j_count {
                    swx[j] += wr[j] * x;
                    swxx[j] += wr[j] * xx;
                    swxz[j] += wzr[j] * x;
                }
            }
            for j in 0..j_count {
                if sw[j] <= 1e-12 {
                    continue;
                }
                let var_x = swxx[j] - swx[j] * swx[j] / sw[j];
                if var_x <= 1e-10 * sw[j] {
                    continue;
                }
                let cov = swxz[j] - swx[j] * swz[j] / sw[j];
                let gain = cov * cov / var_x;
                if best[j].is_none_or(|b| gain > b.0) {
                    let slope = cov / var_x;
                    let intercept = (swz[j] - slope * swx[j]) / sw[j];
                    best[j] = Some((gain, a, slope, intercept));
                }
            }
        }

        let shrink = (j_count as f64 - 1.0) / j_count as f64;
        let mut terms = Vec::with_capacity(j_count);
        for j in 0..j_count {
            if sw[j] <= 1e-12 {
                continue;
            }
            let (attribute, slope, intercept) = match best[j] {
                Some((_, a, s, i)) => (a, s, i),
                None => (0, 0.0, swz[j] / sw[j]),
            };
            terms.push(StumpTerm {
                class: j,
                attribute,
                intercept: intercept * shrink,
                slope: slope * shrink,
            });
        }
        self.apply(&terms);
        terms
    }

    fn apply(&mut self, terms: &[StumpTerm]) {
        apply_terms(self.data, self.n_classes, &mut self.scores, terms);
    }
}

pub(crate) fn apply_terms(data: &Columns, n_classes: usize, scores: &mut [f64], terms: &[StumpTerm]) {
    for t in terms {
        let col = &data.cols[t.attribute];
        for r in 0..data.n_rows {
            scores[r * n_classes + t.class] += t.intercept + t.slope * col[r];
        }
    }
}

pub(crate) fn accuracy_of_scores(scores: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(r, &l)| argmax(&scores[r * n_classes..(r + 1) * n_classes]) == l)
        .count();
    correct as f64 / labels.len().max(1) as f64
}

/// Stratified, seeded split of `rows` into (fit, holdout).
pub(crate) fn holdout_split(
    rows: &[usize],
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for &r in rows {
        by_class.entry(labels[r]).or_default().push(r);
    }
    let mut rng = seeded_rng(seed);
    let (mut fit, mut hold) = (Vec::new(), Vec::new());
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        let n_hold = (fraction * members.len() as f64 + 0.5).floor() as usize;
        let n_hold = n_hold.min(members.len().saturating_sub(1));
        hold.extend_from_slice(&members[..n_hold]);
        fit.extend_from_slice(&members[n_hold..]);
    }
    fit.sort_unstable();
    hold.sort_unstable();
    (fit, hold)
}

/// Number of boosting iterations with the best holdout accuracy (the
/// earliest such count), together with that accuracy.
pub(crate) fn select_iterations(
    xs: &[Vec<f64>],
    y: &[usize],
    usable: &[bool],
    cfg: &TrainConfig,
) -> (usize, Option<f64>) {
    let all: Vec<usize> = (0..xs.len()).collect();
    let (fit, hold) = holdout_split(&all, y, cfg.holdout_fraction, cfg.seed);
    let fit_classes: std::collections::BTreeSet<_> = fit.iter().map(|&r| y[r]).collect();
    if hold.is_empty() || fit_classes.len() < 2 || cfg.max_iterations == 0 {
        return (cfg.max_iterations, None);
    }
    let fit_cols = Columns::gather(xs, &fit);
    let hold_cols = Columns::gather(xs, &hold);
    let hold_labels: Vec<usize> = hold.iter().map(|&r| y[r]).collect();
    let mut booster = Booster::new(
        &fit_cols,
        fit.iter().map(|&r| y[r]).collect(),
        usable,
        cfg.n_classes,
        None,
    );
    let mut hold_scores = vec![0.0; hold.len() * cfg.n_classes];
    let (mut best_it, mut best_acc) = (0, f64::NEG_INFINITY);
    for it in 1..=cfg.max_iterations {
        let terms = booster.step();
        apply_terms(&hold_cols, cfg.n_classes, &mut hold_scores, &terms);
        let acc = accuracy_of_scores(&hold_scores, &hold_labels, cfg.n_classes);
        if acc > best_acc {
            best_acc = acc;
            best_it = it;
        }
        if it - best_it >= cfg.patience {
            break;
        }
    }
    log::debug!("holdout selected {best_it} iterations (accuracy {best_acc:.4})");
    (best_it, Some(best_acc))
}

/// Multinomial logistic regression fit by LogitBoost with single-attribute
/// linear base learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleLogistic {
    pub n_classes: usize,
    pub standardizer: Standardizer,
    pub n_iterations: usize,
    pub holdout_accuracy: Option<f64>,
    pub terms: Vec<StumpTerm>,
}

impl SimpleLogistic {
    pub fn train(x: &[Vec<f64>], y: &[usize], cfg: &TrainConfig) -> Result<Self, ClassifierError> {
        validate_training(x, y, cfg.n_classes)?;
        let standardizer = Standardizer::fit(x);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
        let usable: Vec<bool> = (0..standardizer.dim()).map(|a| standardizer.usable(a)).collect();
        let (n_iterations, holdout_accuracy) = select_iterations(&xs, y, &usable, cfg);
        let terms = fit_terms(&xs, y, &usable, cfg.n_classes, n_iterations);
        Ok(Self {
            n_classes: cfg.n_classes,
            standardizer,
            n_iterations,
            holdout_accuracy,
            terms,
        })
    }

    /// A model with no boosting iterations (uniform predictions).
    pub fn untrained(n_classes: usize, n_attributes: usize) -> Self {
        Self {
            n_classes,
            standardizer: Standardizer {
                mean: vec![0.0; n_attributes],
                scale: vec![1.0; n_attributes],
            },
            n_iterations: 0,
            holdout_accuracy: None,
            terms: Vec::new(),
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.standardizer.dim()
    }

    /// Raw class scores for a feature vector (before softmax).
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if x.len() != self.n_attributes() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.n_attributes(),
                got: x.len(),
            });
        }
        let xs = self.standardizer.apply(x);
        let mut scores = vec![0.0; self.n_classes];
        for t in &self.terms {
            scores[t.class] += t.eval(&xs);
        }
        Ok(scores)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        Ok(softmax(&self.scores(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub(crate) fn fit_terms(
    xs: &[Vec<f64>],
    y: &[usize],
    usable: &[bool],
    n_classes: usize,
    iterations: usize,
) -> Vec<StumpTerm> {
    let all: Vec<usize> = (0..xs.len()).collect();
    let cols = Columns::gather(xs, &all);
    let mut booster = Booster::new(&cols, y.to_vec(), usable, n_classes, None);
    let mut terms = Vec::new();
    for _ in 0..iterations {
        terms.extend(booster.step());
    }
    terms
}
