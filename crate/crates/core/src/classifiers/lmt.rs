use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::logitboost::{select_iterations, Booster, Columns, SimpleLogistic};
use super::{softmax, validate_training, ClassifierError, Standardizer, StumpTerm, TrainConfig};
use crate::util::{argmax, seeded_rng};

/// Binary test on a standardized attribute: rows with `x ≤ threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSplit {
    pub attribute: usize,
    pub threshold: f64,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

/// A node holds the boosting terms it added on top of its parent's model.
/// The class scores at a node are the sum of all terms on the root path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub terms: Vec<StumpTerm>,
    pub n_samples: usize,
    /// Training rows at this node misclassified by this node's model.
    pub n_errors: usize,
    pub split: Option<TreeSplit>,
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match &self.split {
            None => 0,
            Some(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match &self.split {
            None => 1,
            Some(s) => s.left.n_leaves() + s.right.n_leaves(),
        }
    }
}

/// Outcome of cross-validated cost-complexity pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningSummary {
    /// Selected complexity penalty (`None` means the root-only tree).
    pub alpha: Option<f64>,
    pub cv_accuracy_pruned: f64,
    pub cv_accuracy_root: f64,
    pub leaves_before: usize,
    pub leaves_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModelTree {
    pub n_classes: usize,
    pub standardizer: Standardizer,
    /// Boosting iterations run at every node.
    pub n_iterations: usize,
    pub root: TreeNode,
    pub pruning: Option<PruningSummary>,
}

impl LogisticModelTree {
    pub fn train(x: &[Vec<f64>], y: &[usize], cfg: &TrainConfig) -> Result<Self, ClassifierError> {
        validate_training(x, y, cfg.n_classes)?;
        let standardizer = Standardizer::fit(x);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
        let usable: Vec<bool> = (0..standardizer.dim()).map(|a| standardizer.usable(a)).collect();
        let (m, _) = select_iterations(&xs, y, &usable, cfg);
        let builder = Builder {
            xs: &xs,
            y,
            usable: &usable,
            cfg,
            iterations: m,
        };

        let all: Vec<usize> = (0..xs.len()).collect();
        let full = builder.grow(&all);
        let leaves_before = full.n_leaves();
        let (root, pruning) = match builder.cross_validate(&all, &full) {
            Some(cv) => {
                let flat = Flat::new(&full);
                let seq = flat.pruning_sequence(xs.len());
                let mask = subtree_for(&seq, cv.alpha.unwrap_or(f64::INFINITY));
                let root = flat.compact(0, mask);
                let summary = PruningSummary {
                    leaves_after: root.n_leaves(),
                    leaves_before,
                    ..cv
                };
                (root, Some(summary))
            }
            None => (full, None),
        };
        log::debug!(
            "tree: {} iterations per node, {} -> {} leaves",
            m,
            leaves_before,
            root.n_leaves()
        );
        Ok(Self {
            n_classes: cfg.n_classes,
            standardizer,
            n_iterations: m,
            root,
            pruning,
        })
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    /// The logistic model at the root alone.
    pub fn root_model(&self) -> SimpleLogistic {
        SimpleLogistic {
            n_classes: self.n_classes,
            standardizer: self.standardizer.clone(),
            n_iterations: self.n_iterations,
            holdout_accuracy: None,
            terms: self.root.terms.clone(),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if x.len() != self.standardizer.dim() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: x.len(),
            });
        }
        let xs = self.standardizer.apply(x);
        let mut scores = vec![0.0; self.n_classes];
        let mut node = &self.root;
        loop {
            for t in &node.terms {
                scores[t.class] += t.eval(&xs);
            }
            match &node.split {
                Some(s) if xs[s.attribute] <= s.threshold => node = &s.left,
                Some(s) => node = &s.right,
                None => break,
            }
        }
        Ok(softmax(&scores))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    y: &'a [usize],
    usable: &'a [bool],
    cfg: &'a TrainConfig,
    iterations: usize,
}

impl Builder<'_> {
    fn grow(&self, rows: &[usize]) -> TreeNode {
        let j = self.cfg.n_classes;
        self.grow_node(rows, vec![0.0; rows.len() * j], 0)
    }

    fn grow_node(&self, rows: &[usize], parent_scores: Vec<f64>, depth: usize) -> TreeNode {
        let j = self.cfg.n_classes;
        let cols = Columns::gather(self.xs, rows);
        let labels: Vec<usize> = rows.iter().map(|&r| self.y[r]).collect();
        let mut booster = Booster::new(&cols, labels.clone(), self.usable, j, Some(parent_scores));
        let mut terms = Vec::new();
        for _ in 0..self.iterations {
            terms.extend(booster.step());
        }
        let scores = booster.into_scores();
        let n_errors = labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| argmax(&scores[i * j..(i + 1) * j]) != l)
            .count();

        let pure = labels.iter().all(|&l| l == labels[0]);
        let split = if pure || rows.len() < self.cfg.min_split || depth >= self.cfg.max_depth {
            None
        } else {
            best_split(&cols, &labels, j, self.cfg.min_leaf)
        };
        let split = split.map(|(attribute, threshold)| {
            let (mut lr, mut ls, mut rr, mut rs) = (vec![], vec![], vec![], vec![]);
            for (i, &r) in rows.iter().enumerate() {
                let s = &scores[i * j..(i + 1) * j];
                if cols.cols[attribute][i] <= threshold {
                    lr.push(r);
                    ls.extend_from_slice(s);
                } else {
                    rr.push(r);
                    rs.extend_from_slice(s);
                }
            }
            TreeSplit {
                attribute,
                threshold,
                left: Box::new(self.grow_node(&lr, ls, depth + 1)),
                right: Box::new(self.grow_node(&rr, rs, depth + 1)),
            }
        });
        TreeNode {
            terms,
            n_samples: rows.len(),
            n_errors,
            split,
        }
    }

    /// Stratified k-fold estimate of the best complexity penalty.
    fn cross_validate(&self, rows: &[usize], full: &TreeNode) -> Option<PruningSummary> {
        let k = self.cfg.cv_folds;
        if k < 2 || rows.len() < k {
            return None;
        }
        let folds = stratified_folds(rows, self.y, k, self.cfg.seed);
        let j = self.cfg.n_classes;

        // per fold: pruning sequence of the fold tree plus the held-out rows
        let mut fold_data = Vec::with_capacity(k);
        for f in 0..k {
            let train: Vec<usize> = rows.iter().copied().filter(|&r| folds[&r] != f).collect();
            let test: Vec<usize> = rows.iter().copied().filter(|&r| folds[&r] == f).collect();
            if test.is_empty() || train.iter().all(|&r| self.y[r] == self.y[train[0]]) {
                return None;
            }
            let tree = self.grow(&train);
            fold_data.push((tree, train.len(), test));
        }

        let alphas: Vec<f64> = Flat::new(full)
            .pruning_sequence(rows.len())
            .iter()
            .map(|(a, _)| *a)
            .collect();
        let betas = candidate_penalties(&alphas);

        let mut errors = vec![0usize; betas.len()];
        for (tree, n_train, test) in &fold_data {
            let flat = Flat::new(tree);
            let seq = flat.pruning_sequence(*n_train);
            for (bi, beta) in betas.iter().enumerate() {
                let mask = subtree_for(&seq, beta.unwrap_or(f64::INFINITY));
                errors[bi] += test
                    .iter()
                    .filter(|&&r| argmax(&flat.scores(&self.xs[r], mask, j)) != self.y[r])
                    .count();
            }
        }
        // lowest error; ties go to the larger penalty (smaller tree)
        let mut best = 0;
        for (bi, &e) in errors.iter().enumerate() {
            if e <= errors[best] {
                best = bi;
            }
        }
        let n = rows.len() as f64;
        Some(PruningSummary {
            alpha: betas[best],
            cv_accuracy_pruned: 1.0 - errors[best] as f64 / n,
            cv_accuracy_root: 1.0 - errors[betas.len() - 1] as f64 / n,
            leaves_before: 0,
            leaves_after: 0,
        })
    }
}

/// Candidate penalties between consecutive breakpoints: geometric mean
/// (arithmetic when the lower end is 0), and `None` (infinite) for the
/// root-only tree.
fn candidate_penalties(alphas: &[f64]) -> Vec<Option<f64>> {
    let mut out: Vec<Option<f64>> = alphas
        .windows(2)
        .map(|w| {
            Some(if w[0] > 0.0 {
                (w[0] * w[1]).sqrt()
            } else {
                (w[0] + w[1]) / 2.0
            })
        })
        .collect();
    out.push(None);
    out
}

/// Largest-alpha member of the sequence with alpha ≤ penalty.
fn subtree_for(seq: &[(f64, Vec<bool>)], penalty: f64) -> &[bool] {
    let mut chosen = &seq[0].1;
    for (a, mask) in seq {
        if *a <= penalty {
            chosen = mask;
        }
    }
    chosen
}

fn stratified_folds(rows: &[usize], y: &[usize], k: usize, seed: u64) -> BTreeMap<usize, usize> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        by_class.entry(y[r]).or_default().push(r);
    }
    let mut rng = seeded_rng(seed.wrapping_add(1));
    let mut folds = BTreeMap::new();
    let mut next = 0;
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        for r in members {
            folds.insert(r, next % k);
            next += 1;
        }
    }
    folds
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Highest information-gain split over midpoints between distinct values.
/// Ties prefer the lower attribute, then the lower threshold.
pub(crate) fn best_split(
    cols: &Columns,
    labels: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = labels.len();
    let mut total = vec![0usize; n_classes];
    for &l in labels {
        total[l] += 1;
    }
    let parent = entropy(&total, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for (a, col) in cols.cols.iter().enumerate() {
        order.sort_by(|&p, &q| col[p].total_cmp(&col[q]));
        let mut left = vec![0usize; n_classes];
        let mut right = total.clone();
        for i in 0..n - 1 {
            let l = labels[order[i]];
            left[l] += 1;
            right[l] -= 1;
            let (lo, hi) = (col[order[i]], col[order[i + 1]]);
            let n_left = i + 1;
            if hi <= lo || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let gain = parent
                - (n_left as f64 * entropy(&left, n_left)
                    + (n - n_left) as f64 * entropy(&right, n - n_left))
                    / n as f64;
            if gain > 1e-12 && best.is_none_or(|b| gain > b.0 + 1e-12) {
                best = Some((gain, a, lo + (hi - lo) / 2.0));
            }
        }
    }
    best.map(|(_, a, t)| (a, t))
}

/// Pre-order view of a tree used for pruning.
struct Flat<'a> {
    nodes: Vec<&'a TreeNode>,
    children: Vec<Option<(usize, usize)>>,
}

impl<'a> Flat<'a> {
    fn new(root: &'a TreeNode) -> Self {
        let mut flat = Flat {
            nodes: Vec::new(),
            children: Vec::new(),
        };
        flat.push(root);
        flat
    }

    fn push(&mut self, node: &'a TreeNode) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        self.children.push(None);
        if let Some(s) = &node.split {
            let l = self.push(&s.left);
            let r = self.push(&s.right);
            self.children[id] = Some((l, r));
        }
        id
    }

    fn is_leaf(&self, id: usize, collapsed: &[bool]) -> bool {
        collapsed[id] || self.children[id].is_none()
    }

    /// (leaves, training errors) of the pruned subtree rooted at `id`.
    fn subtree_stats(&self, id: usize, collapsed: &[bool]) -> (usize, usize) {
        if self.is_leaf(id, collapsed) {
            return (1, self.nodes[id].n_errors);
        }
        let (l, r) = self.children[id].unwrap();
        let (la, ea) = self.subtree_stats(l, collapsed);
        let (lb, eb) = self.subtree_stats(r, collapsed);
        (la + lb, ea + eb)
    }

    /// Weakest link among internal nodes of the pruned tree: the smallest
    /// per-leaf increase in training error from collapsing a node.
    fn weakest_link(&self, collapsed: &[bool], n: usize) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            if self.is_leaf(id, collapsed) {
                continue;
            }
            let (leaves, sub_err) = self.subtree_stats(id, collapsed);
            let g = (self.nodes[id].n_errors as f64 - sub_err as f64) / n as f64
                / (leaves as f64 - 1.0);
            if best.is_none_or(|b| g < b.0 || (g == b.0 && id < b.1)) {
                best = Some((g, id));
            }
            let (l, r) = self.children[id].unwrap();
            stack.push(r);
            stack.push(l);
        }
        best
    }

    /// Nested subtrees with their penalty breakpoints, from the full tree
    /// (alpha 0) to the root alone.
    fn pruning_sequence(&self, n: usize) -> Vec<(f64, Vec<bool>)> {
        let mut collapsed = vec![false; self.nodes.len()];
        let collapse_up_to = |collapsed: &mut Vec<bool>, level: f64| {
            while let Some((g, id)) = self.weakest_link(collapsed, n) {
                if g > level + 1e-12 {
                    break;
                }
                collapsed[id] = true;
            }
        };
        collapse_up_to(&mut collapsed, 0.0);
        let mut seq = vec![(0.0, collapsed.clone())];
        while let Some((g, _)) = self.weakest_link(&collapsed, n) {
            collapse_up_to(&mut collapsed, g);
            seq.push((g, collapsed.clone()));
        }
        seq
    }

    fn scores(&self, x: &[f64], collapsed: &[bool], n_classes: usize) -> Vec<f64> {
        let mut scores = vec![0.0; n_classes];
        let mut id = 0;
        loop {
            for t in &self.nodes[id].terms {
                scores[t.class] += t.eval(x);
            }
            if self.is_leaf(id, collapsed) {
                return scores;
            }
            let split = self.nodes[id].split.as_ref().unwrap();
            let (l, r) = self.children[id].unwrap();
            id = if x[split.attribute] <= split.threshold { l } else { r };
        }
    }

    fn compact(&self, id: usize, collapsed: &[bool]) -> TreeNode {
        let node = self.nodes[id];
        let split = if self.is_leaf(id, collapsed) {
            None
        } else {
            let s = node.split.as_ref().unwrap();
            let (l, r) = self.children[id].unwrap();
            Some(TreeSplit {
                attribute: s.attribute,
                threshold: s.threshold,
                left: Box::new(self.compact(l, collapsed)),
                right: Box::new(self.compact(r, collapsed)),
            })
        };
        TreeNode {
            terms: node.terms.clone(),
            n_samples: node.n_samples,
            n_errors: node.n_errors,
            split,
        }
    }
}
