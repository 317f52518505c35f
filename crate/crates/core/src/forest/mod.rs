//! A self-contained random forest: bagged CART trees with per-split feature
//! subsampling, soft-vote probabilities, and Gini feature importance.
//!
//! Determinism contract: training is a pure function of (rows, params). Each
//! tree draws its bootstrap and per-node feature candidates from an
//! independent stream derived from (seed, tree index) through a fixed 64-bit
//! mixing function, so results are identical at any thread count and the
//! bootstrap can be replayed for out-of-bag evaluation.

pub mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{mix, Stream};
pub use tree::{best_split_classification, best_split_regression, gini_impurity, midpoint, Split};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("cannot train on an empty dataset")]
    EmptyTrainingSet,
    #[error("inconsistent feature dimensions: expected {expected}, row {row} has {found}")]
    RaggedRows {
        expected: usize,
        row: usize,
        found: usize,
    },
    #[error("probe vector has {found} features, forest expects {expected}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("forest file I/O: {0}")]
    Io(String),
    #[error("forest file version {0} is not supported")]
    Version(u32),
}

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureRule {
    Sqrt,
    Third,
    All,
}

impl FeatureRule {
    pub fn count(&self, n_features: usize) -> usize {
        match self {
            FeatureRule::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeatureRule::Third => (n_features / 3).max(1),
            FeatureRule::All => n_features,
        }
    }
}

fn default_n_trees() -> usize {
    1000
}

fn default_max_depth() -> usize {
    20
}

fn default_min_samples_split() -> usize {
    2
}

fn default_min_samples_leaf() -> usize {
    1
}

fn default_bootstrap() -> bool {
    true
}

/// Forest hyperparameters. The defaults (1000 trees, depth 20) are the
/// configured diagnostic defaults; tests use smaller forests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    /// None picks the task-kind default: sqrt for classification, a third of
    /// the features for regression.
    #[serde(default)]
    pub features_per_split: Option<FeatureRule>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
            min_samples_split: default_min_samples_split(),
            min_samples_leaf: default_min_samples_leaf(),
            features_per_split: None,
            bootstrap: default_bootstrap(),
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    ClassLeaf {
        counts: Vec<u32>,
    },
    ValueLeaf {
        value: f64,
        count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node arena; the root is index 0.
    pub nodes: Vec<Node>,
    /// Unnormalized weighted impurity decrease per feature.
    pub importance: Vec<f64>,
}

impl Tree {
    fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
                _ => 0,
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForestKind {
    Classification,
    Regression,
}

pub const FOREST_FILE_VERSION: u32 = 1;

/// A trained forest. Immutable and shareable after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub version: u32,
    pub kind: ForestKind,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_rows: usize,
    pub params: ForestParams,
    /// Optional feature schema for audit output.
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

fn check_rows(x: &[Vec<f64>]) -> Result<usize, ForestError> {
    if x.is_empty() {
        return Err(ForestError::EmptyTrainingSet);
    }
    let n_features = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != n_features {
            return Err(ForestError::RaggedRows {
                expected: n_features,
                row: i,
                found: row.len(),
            });
        }
    }
    Ok(n_features)
}

/// The rows tree `index` trains on: a replayable bootstrap resample, or all
/// rows when bootstrapping is off.
fn tree_rows(n: usize, bootstrap: bool, rng: &mut Stream) -> Vec<u32> {
    if bootstrap {
        (0..n).map(|_| rng.index(n) as u32).collect()
    } else {
        (0..n as u32).collect()
    }
}

fn tree_stream(seed: u64, tree_index: usize) -> Stream {
    Stream::new(mix(seed, tree_index as u64 + 1))
}

fn train(
    x: &[Vec<f64>],
    targets: tree::Targets<'_>,
    kind: ForestKind,
    n_classes: usize,
    params: &ForestParams,
) -> Result<Forest, ForestError> {
    let n_features = check_rows(x)?;
    let rule = params.features_per_split.unwrap_or(match kind {
        ForestKind::Classification => FeatureRule::Sqrt,
        ForestKind::Regression => FeatureRule::Third,
    });
    let builder = tree::TreeBuilder {
        x,
        targets,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split.max(2),
        min_samples_leaf: params.min_samples_leaf.max(1),
        features_per_split: rule.count(n_features),
        n_features,
        n_root: x.len(),
    };

    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_stream(params.seed, i);
            let rows = tree_rows(x.len(), params.bootstrap, &mut rng);
            builder.build(rows, &mut rng)
        })
        .collect();

    Ok(Forest {
        version: FOREST_FILE_VERSION,
        kind,
        n_features,
        n_classes,
        n_rows: x.len(),
        params: params.clone(),
        feature_names: Vec::new(),
        trees,
    })
}

/// Train a classification forest over class labels in [0, n_classes).
pub fn train_classifier(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Result<Forest, ForestError> {
    assert_eq!(x.len(), y.len());
    train(
        x,
        tree::Targets::Classes { y, n_classes },
        ForestKind::Classification,
        n_classes,
        params,
    )
}

/// Train a variance-reduction regression forest.
pub fn train_regressor(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
) -> Result<Forest, ForestError> {
    assert_eq!(x.len(), y.len());
    train(x, tree::Targets::Values { y }, ForestKind::Regression, 0, params)
}

impl Forest {
    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    fn check_probe(&self, x: &[f64]) -> Result<(), ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::SchemaMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Average of per-tree leaf class frequencies; sums to 1.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForestError> {
        self.check_probe(x)?;
        let mut probs = vec![0.0; self.n_classes];
        for tree in &self.trees {
            if let Node::ClassLeaf { counts } = tree.leaf_for(x) {
                let total: u64 = counts.iter().map(|c| u64::from(*c)).sum();
                if total > 0 {
                    for (p, c) in probs.iter_mut().zip(counts) {
                        *p += f64::from(*c) / total as f64;
                    }
                }
            }
        }
        let n = self.trees.len().max(1) as f64;
        for p in &mut probs {
            *p /= n;
        }
        Ok(probs)
    }

    /// Argmax class; ties break to the lowest class index.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize, ForestError> {
        let probs = self.predict_proba(x)?;
        Ok(argmax(&probs))
    }

    /// Mean of leaf means (regression forests).
    pub fn predict_value(&self, x: &[f64]) -> Result<f64, ForestError> {
        self.check_probe(x)?;
        let mut sum = 0.0;
        for tree in &self.trees {
            if let Node::ValueLeaf { value, .. } = tree.leaf_for(x) {
                sum += value;
            }
        }
        Ok(sum / self.trees.len().max(1) as f64)
    }

    /// Mean per-tree weighted impurity decrease, normalized to sum 1.
    /// All-leaf forests have nothing to attribute and return zeros.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (t, v) in totals.iter_mut().zip(&tree.importance) {
                *t += v;
            }
        }
        let n = self.trees.len().max(1) as f64;
        for t in &mut totals {
            *t /= n;
        }
        let sum: f64 = totals.iter().sum();
        if sum > 0.0 {
            for t in &mut totals {
                *t /= sum;
            }
        }
        totals
    }

    /// Out-of-bag accuracy (classification): each sample is voted on by the
    /// trees whose replayed bootstrap skipped it. None when bootstrapping was
    /// off or no sample was ever out of bag.
    pub fn oob_accuracy(&self, x: &[Vec<f64>], y: &[usize]) -> Option<f64> {
        if !self.params.bootstrap || self.kind != ForestKind::Classification {
            return None;
        }
        let n = x.len();
        let mut votes = vec![vec![0.0; self.n_classes]; n];
        let mut voted = vec![false; n];
        for (i, tree) in self.trees.iter().enumerate() {
            let mut rng = tree_stream(self.params.seed, i);
            let rows = tree_rows(n, true, &mut rng);
            let mut in_bag = vec![false; n];
            for r in rows {
                in_bag[r as usize] = true;
            }
            for (row, bagged) in in_bag.iter().enumerate() {
                if *bagged {
                    continue;
                }
                if let Node::ClassLeaf { counts } = tree.leaf_for(&x[row]) {
                    let total: u64 = counts.iter().map(|c| u64::from(*c)).sum();
                    if total > 0 {
                        for (v, c) in votes[row].iter_mut().zip(counts) {
                            *v += f64::from(*c) / total as f64;
                        }
                        voted[row] = true;
                    }
                }
            }
        }
        let mut correct = 0usize;
        let mut counted = 0usize;
        for row in 0..n {
            if !voted[row] {
                continue;
            }
            counted += 1;
            if argmax(&votes[row]) == y[row] {
                correct += 1;
            }
        }
        if counted == 0 {
            None
        } else {
            Some(correct as f64 / counted as f64)
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ForestError> {
        let file = std::fs::File::create(path).map_err(|e| ForestError::Io(e.to_string()))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| ForestError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Forest, ForestError> {
        let file = std::fs::File::open(path).map_err(|e| ForestError::Io(e.to_string()))?;
        let forest: Forest = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| ForestError::Io(e.to_string()))?;
        if forest.version != FOREST_FILE_VERSION {
            return Err(ForestError::Version(forest.version));
        }
        Ok(forest)
    }
}

/// Argmax with lowest-index tie-breaking.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params(n_trees: usize) -> ForestParams {
        ForestParams {
            n_trees,
            max_depth: 16,
            seed: 7,
            ..ForestParams::default()
        }
    }

    fn separable() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, (i * 3 % 7) as f64])
            .collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        (x, y)
    }

    #[test]
    fn single_tree_memorizes_separable_data() {
        let (x, y) = separable();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_depth: 64,
            features_per_split: Some(FeatureRule::All),
            seed: 1,
            ..ForestParams::default()
        };
        let forest = train_classifier(&x, &y, 2, &params).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| forest.predict_class(xi).unwrap() == **yi)
            .count();
        assert_eq!(correct, x.len());
    }

    #[test]
    fn same_seed_gives_identical_predictions() {
        let (x, y) = separable();
        let params = small_params(12);
        let a = train_classifier(&x, &y, 2, &params).unwrap();
        let b = train_classifier(&x, &y, 2, &params).unwrap();
        assert_eq!(a, b);
        let probe = vec![4.5, 2.0];
        assert_eq!(a.predict_proba(&probe).unwrap(), b.predict_proba(&probe).unwrap());
    }

    #[test]
    fn pure_leaf_forest_is_one_hot() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0usize, 1];
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(FeatureRule::All),
            ..ForestParams::default()
        };
        let forest = train_classifier(&x, &y, 2, &params).unwrap();
        assert_eq!(forest.predict_proba(&[1.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn tied_trees_split_probability_and_argmax_prefers_low_index() {
        // Two stumps voting for different pure classes.
        let tree_for = |class: usize| Tree {
            nodes: vec![Node::ClassLeaf {
                counts: if class == 0 { vec![5, 0] } else { vec![0, 5] },
            }],
            importance: vec![0.0],
        };
        let forest = Forest {
            version: FOREST_FILE_VERSION,
            kind: ForestKind::Classification,
            n_features: 1,
            n_classes: 2,
            n_rows: 10,
            params: ForestParams::default(),
            feature_names: Vec::new(),
            trees: vec![tree_for(0), tree_for(1)],
        };
        let probs = forest.predict_proba(&[0.0]).unwrap();
        assert_eq!(probs, vec![0.5, 0.5]);
        assert_eq!(forest.predict_class(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn planted_feature_dominates_importance() {
        // Feature 0 determines the label; features 1..9 are noise.
        let mut rng = Stream::new(3);
        let n = 1000;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let signal = rng.next_f64();
            let mut row = vec![signal];
            for _ in 0..9 {
                row.push(rng.next_f64());
            }
            y.push(usize::from(signal > 0.5));
            x.push(row);
        }
        let forest = train_classifier(&x, &y, 2, &small_params(60)).unwrap();
        let imp = forest.feature_importance();
        assert!(imp[0] > 0.8, "importance {imp:?}");
        let total: f64 = imp.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);

        let oob = forest.oob_accuracy(&x, &y).unwrap();
        assert!(oob >= 0.95, "oob {oob}");
    }

    #[test]
    fn single_feature_forest_has_importance_one() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let params = ForestParams {
            n_trees: 3,
            bootstrap: false,
            features_per_split: Some(FeatureRule::All),
            ..ForestParams::default()
        };
        let forest = train_classifier(&x, &y, 2, &params).unwrap();
        assert_eq!(forest.feature_importance(), vec![1.0]);
    }

    #[test]
    fn regressor_predicts_leaf_means_in_order() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 9.0, 10.0].iter().map(|v| vec![*v]).collect();
        let y = vec![5.0, 5.0, 20.0, 20.0];
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(FeatureRule::All),
            ..ForestParams::default()
        };
        let forest = train_regressor(&x, &y, &params).unwrap();
        assert_eq!(forest.predict_value(&[1.5]).unwrap(), 5.0);
        assert_eq!(forest.predict_value(&[9.5]).unwrap(), 20.0);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let err = train_classifier(&[], &[], 2, &ForestParams::default());
        assert!(matches!(err, Err(ForestError::EmptyTrainingSet)));
    }

    #[test]
    fn forest_file_round_trips() {
        let (x, y) = separable();
        let forest = train_classifier(&x, &y, 2, &small_params(4))
            .unwrap()
            .with_feature_names(vec!["a".into(), "b".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.json");
        forest.save(&path).unwrap();
        let back = Forest::load(&path).unwrap();
        assert_eq!(forest, back);
    }

    #[test]
    fn depth_respects_max_depth() {
        let mut rng = Stream::new(11);
        let n = 300;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.next_f64()).collect())
            .collect();
        let y: Vec<usize> = (0..n).map(|_| rng.index(2)).collect();
        let params = ForestParams {
            n_trees: 5,
            max_depth: 4,
            seed: 2,
            ..ForestParams::default()
        };
        let forest = train_classifier(&x, &y, 2, &params).unwrap();
        for tree in &forest.trees {
            assert!(tree.depth() <= 4);
        }
    }
}
