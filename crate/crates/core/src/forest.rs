//! Random Forest of CART trees grown on bootstrap samples with Gini impurity.
//!
//! Every tree draws from its own RNG stream derived from the master seed and
//! the tree index, so parallel and sequential training build identical
//! forests. Feature importance defaults to split frequency: the share of
//! internal nodes, over all trees, that split on each feature.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel3;
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::input(format!(
                "{} values for a {n_rows}×{n_cols} matrix",
                data.len()
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::input("feature rows have unequal lengths"));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    ThreeClass,
    Binary,
}

impl ClassMode {
    pub fn n_classes(self) -> usize {
        match self {
            ClassMode::ThreeClass => 3,
            ClassMode::Binary => 2,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            ClassMode::ThreeClass => &["interictal", "ictal", "early_ictal"],
            ClassMode::Binary => &["non_seizure", "seizure"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, ⌊√d⌋)`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.min(d),
        };
        k.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceKind {
    /// How often a feature is chosen at a split point.
    SplitCount,
    /// Total Gini decrease attributed to the feature.
    ImpurityDecrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub rng_seed: u64,
    pub class_mode: ClassMode,
    pub importance: ImportanceKind,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 3000,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            max_depth: None,
            rng_seed: 0,
            class_mode: ClassMode::ThreeClass,
            importance: ImportanceKind::SplitCount,
        }
    }
}

impl ForestParams {
    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    pub fn with_mode(mut self, class_mode: ClassMode) -> Self {
        self.class_mode = class_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("n_trees", "must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf", "must be at least 1"));
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return Err(Error::config("max_features", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_for(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    } as usize
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }
}

/// Class probabilities in the order of [`ClassMode::class_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior(pub Vec<f64>);

impl Posterior {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub n_features: usize,
    pub classes: Vec<String>,
    pub params: ForestParams,
    /// Per-feature count of internal nodes splitting on that feature.
    pub split_counts: Vec<u64>,
    /// Per-feature sum of weighted Gini decrease (in sample-count units).
    pub impurity_decrease: Vec<f64>,
    pub trees: Vec<Tree>,
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

fn bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

struct TreeStats {
    split_counts: Vec<u64>,
    impurity_decrease: Vec<f64>,
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    stats: TreeStats,
    pairs: Vec<(f64, usize)>,
    features: Vec<usize>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl BestSplit {
    /// Strictly higher score wins. Thresholds are scanned ascending and
    /// features in their random draw order, so ties keep the lower threshold
    /// and the earlier-drawn feature. Breaking ties by feature index instead
    /// would bias split counts toward low-numbered features.
    fn beats(&self, other: &Option<BestSplit>) -> bool {
        other.as_ref().is_none_or(|o| self.score > o.score)
    }
}

fn sum_sq_over_n(counts: &[u32], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .map(|&c| f64::from(c) * f64::from(c))
        .sum::<f64>()
        / f64::from(n)
}

/// `n · gini(counts)` with `n = Σ counts`.
fn weighted_gini(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    f64::from(n) - sum_sq_over_n(counts, n)
}

impl Grower<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &s in samples {
            c[self.y[s]] += 1;
        }
        c
    }

    fn best_split_on(
        &mut self,
        feature: usize,
        samples: &[usize],
        total: &[u32],
    ) -> Option<BestSplit> {
        self.pairs.clear();
        self.pairs
            .extend(samples.iter().map(|&s| (self.x.get(s, feature), self.y[s])));
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.pairs.len();
        if self.pairs[0].0 == self.pairs[n - 1].0 {
            return None;
        }
        let mut left = vec![0u32; self.n_classes];
        let mut best: Option<BestSplit> = None;
        for i in 1..n {
            left[self.pairs[i - 1].1] += 1;
            let (lo, hi) = (self.pairs[i - 1].0, self.pairs[i].0);
            if lo == hi || i < self.min_leaf || n - i < self.min_leaf {
                continue;
            }
            let (mut sl, mut sr) = (0.0, 0.0);
            for (t, l) in total.iter().zip(&left) {
                let (l, r) = (f64::from(*l), f64::from(t - l));
                sl += l * l;
                sr += r * r;
            }
            let score = sl / i as f64 + sr / (n - i) as f64;
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let cand = BestSplit {
                score,
                feature,
                threshold,
            };
            if cand.beats(&best) {
                best = Some(cand);
            }
        }
        best
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let counts = self.counts(&samples);
        let n = samples.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || n < 2 * self.min_leaf {
            self.nodes.push(Node::Leaf { counts });
            return id;
        }

        // Draw candidate features without replacement until `mtry`
        // non-constant ones have been examined or all are exhausted.
        let d = self.features.len();
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        let mut drawn = 0;
        while drawn < d && visited < self.mtry {
            let j = self.rng.random_range(drawn..d);
            self.features.swap(drawn, j);
            let f = self.features[drawn];
            drawn += 1;
            if let Some(cand) = self.best_split_on(f, &samples, &counts) {
                visited += 1;
                if cand.beats(&best) {
                    best = Some(cand);
                }
            }
        }
        let Some(split) = best else {
            self.nodes.push(Node::Leaf { counts });
            return id;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&s| self.x.get(s, split.feature) <= split.threshold);
        let decrease = weighted_gini(&counts)
            - weighted_gini(&self.counts(&left))
            - weighted_gini(&self.counts(&right));
        self.stats.split_counts[split.feature] += 1;
        self.stats.impurity_decrease[split.feature] += decrease;

        self.nodes.push(Node::Leaf { counts: Vec::new() }); // placeholder
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

fn check_training_input(x: &FeatureMatrix, y: &[usize], n_classes: usize) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::input(format!(
            "{} feature rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::input("need at least 2 training samples"));
    }
    if x.n_cols() == 0 {
        return Err(Error::input("need at least 1 feature"));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::input(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::input("training labels contain a single class"));
    }
    if let Some(i) = x.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!(
            "non-finite feature at row {}, column {}",
            i / x.n_cols(),
            i % x.n_cols()
        )));
    }
    Ok(())
}

fn train_tree(
    x: &FeatureMatrix,
    y: &[usize],
    params: &ForestParams,
    index: usize,
) -> (Tree, TreeStats) {
    let d = x.n_cols();
    let mut rng = tree_rng(params.rng_seed, index);
    let samples = bootstrap(&mut rng, x.n_rows());
    let mut g = Grower {
        x,
        y,
        n_classes: params.class_mode.n_classes(),
        mtry: params.max_features.resolve(d),
        min_leaf: params.min_samples_leaf,
        max_depth: params.max_depth.unwrap_or(usize::MAX),
        rng,
        nodes: Vec::new(),
        stats: TreeStats {
            split_counts: vec![0; d],
            impurity_decrease: vec![0.0; d],
        },
        pairs: Vec::with_capacity(x.n_rows()),
        features: (0..d).collect(),
    };
    g.grow(samples, 0);
    (Tree { nodes: g.nodes }, g.stats)
}

/// Trains a forest. `y` holds class indexes below `params.class_mode.n_classes()`.
///
/// Trees are grown in parallel on the current rayon pool.
pub fn train(x: &FeatureMatrix, y: &[usize], params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    let n_classes = params.class_mode.n_classes();
    check_training_input(x, y, n_classes)?;
    let grown: Vec<(Tree, TreeStats)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| train_tree(x, y, params, t))
        .collect();
    let d = x.n_cols();
    let mut split_counts = vec![0u64; d];
    let mut impurity_decrease = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, stats) in grown {
        for j in 0..d {
            split_counts[j] += stats.split_counts[j];
            impurity_decrease[j] += stats.impurity_decrease[j];
        }
        trees.push(tree);
    }
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        n_features: d,
        classes: params.class_mode.class_names(),
        params: params.clone(),
        split_counts,
        impurity_decrease,
        trees,
    })
}

impl ForestModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Mean over trees of the leaf class frequencies.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Posterior> {
        if x.len() != self.n_features {
            return Err(Error::input(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        let k = self.n_classes();
        let mut p = vec![0.0; k];
        for tree in &self.trees {
            let counts = tree.leaf_for(x);
            let total: u32 = counts.iter().sum();
            for (acc, &c) in p.iter_mut().zip(counts) {
                *acc += f64::from(c) / f64::from(total);
            }
        }
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        Ok(Posterior(p))
    }

    pub fn predict_proba_batch(&self, x: &FeatureMatrix) -> Result<Vec<Posterior>> {
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_proba(x.row(i)))
            .collect()
    }

    pub fn feature_importance(&self) -> Vec<f64> {
        self.feature_importance_with(self.params.importance)
    }

    /// Normalized importance; a forest without internal nodes yields the
    /// uniform vector.
    pub fn feature_importance_with(&self, kind: ImportanceKind) -> Vec<f64> {
        let raw: Vec<f64> = match kind {
            ImportanceKind::SplitCount => self.split_counts.iter().map(|&c| c as f64).collect(),
            ImportanceKind::ImpurityDecrease => self.impurity_decrease.clone(),
        };
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return vec![1.0 / self.n_features as f64; self.n_features];
        }
        raw.iter().map(|v| v / total).collect()
    }

    /// Out-of-bag accuracy on the training data the model was built from.
    /// Bootstrap samples are regenerated from the per-tree seeds.
    pub fn oob_accuracy(&self, x: &FeatureMatrix, y: &[usize]) -> Result<f64> {
        if x.n_rows() != y.len() || x.n_cols() != self.n_features {
            return Err(Error::input("OOB data does not match the model"));
        }
        let n = x.n_rows();
        let k = self.n_classes();
        let mut votes = vec![0.0; n * k];
        for (t, tree) in self.trees.iter().enumerate() {
            let mut rng = tree_rng(self.params.rng_seed, t);
            let mut in_bag = vec![false; n];
            for s in bootstrap(&mut rng, n) {
                in_bag[s] = true;
            }
            for i in (0..n).filter(|&i| !in_bag[i]) {
                let counts = tree.leaf_for(x.row(i));
                let total: u32 = counts.iter().sum();
                for c in 0..k {
                    votes[i * k + c] += f64::from(counts[c]) / f64::from(total);
                }
            }
        }
        let mut scored = 0;
        let mut correct = 0;
        for i in 0..n {
            let v = &votes[i * k..(i + 1) * k];
            if v.iter().all(|&p| p == 0.0) {
                continue;
            }
            scored += 1;
            if Posterior(v.to_vec()).argmax() == y[i] {
                correct += 1;
            }
        }
        if scored == 0 {
            return Err(Error::input("no out-of-bag samples"));
        }
        Ok(correct as f64 / scored as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(text)
            .map_err(|e| Error::data("<model>", format!("bad model JSON: {e}")))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::data(
                "<model>",
                format!("unsupported model format version {}", m.format_version),
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Data { reason, .. } => Error::data(path, reason),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    NonSeizure,
    Seizure,
}

impl BinaryLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Early ictal and ictal map to seizure; interictal to non-seizure.
pub fn to_binary_labels(labels: &[ClassLabel3]) -> Vec<BinaryLabel> {
    labels
        .iter()
        .map(|l| {
            if l.is_seizure() {
                BinaryLabel::Seizure
            } else {
                BinaryLabel::NonSeizure
            }
        })
        .collect()
}
