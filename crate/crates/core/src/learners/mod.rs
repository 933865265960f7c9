//! Supervised learners that map a question's feature vector to an expected
//! F-score for one component.
//!
//! All learners see min-max scaled inputs (the scaler is fitted on the training
//! rows and stored with the model) and return scores clamped to [0, 1].
//! Tree ensembles draw tree `t`'s randomness from `derive_index(seed, t)` so a
//! one-tree ensemble reproduces the single tree grown from the same seed.

mod bayes;
mod logistic;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::NaiveBayesModel;
pub use logistic::{sigmoid, LogisticModel};

use crate::features::FeatureVector;
use crate::rng;
use logistic::LogisticParams;
use tree::{Tree, TreeParams};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("row {row} has {found} features, expected {expected}")]
    Dimension { row: usize, expected: usize, found: usize },
    #[error("{features} feature names for {expected} columns")]
    FeatureNames { expected: usize, features: usize },
    #[error("label {value} at row {row} is outside [0, 1]")]
    BadLabel { row: usize, value: f64 },
    #[error("unknown hyperparameter `{name}` for {kind}")]
    UnknownHyper { kind: LearnerKind, name: String },
    #[error("hyperparameter `{name}` = {value} is invalid: {reason}")]
    BadHyper { name: String, value: f64, reason: String },
    #[error("unknown learner `{0}`")]
    UnknownKind(String),
    #[error("model has no split nodes, impurity importance is undefined")]
    NoSplits,
    #[error("{kind} models do not expose impurity importances")]
    NotTreeBased { kind: LearnerKind },
    #[error("k-fold needs 2 <= k <= {n} (got k = {k})")]
    BadFoldCount { k: usize, n: usize },
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("malformed model file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    DecisionTree,
    RandomForest,
    ExtremelyRandomizedTrees,
    GradientBoostedTrees,
    GaussianNaiveBayes,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::LogisticRegression,
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::ExtremelyRandomizedTrees,
        LearnerKind::GradientBoostedTrees,
        LearnerKind::GaussianNaiveBayes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::DecisionTree => "decision_tree",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::ExtremelyRandomizedTrees => "extremely_randomized_trees",
            LearnerKind::GradientBoostedTrees => "gradient_boosted_trees",
            LearnerKind::GaussianNaiveBayes => "gaussian_naive_bayes",
        }
    }

    pub fn is_tree_based(self) -> bool {
        !matches!(self, LearnerKind::LogisticRegression | LearnerKind::GaussianNaiveBayes)
    }

    /// Defaults for every hyperparameter the kind accepts.
    pub fn default_hyper(self) -> Hyper {
        let pairs: &[(&str, f64)] = match self {
            LearnerKind::LogisticRegression => &[("learning_rate", 0.1), ("l2", 1e-3), ("max_iter", 2000.0), ("tol", 1e-6)],
            LearnerKind::DecisionTree => &[
                ("max_depth", 12.0),
                ("min_samples_leaf", 1.0),
                ("max_features", 1.0),
                ("random_splits", 0.0),
                ("binarize_labels", 0.0),
            ],
            LearnerKind::RandomForest => &[
                ("n_trees", 100.0),
                ("max_depth", 12.0),
                ("min_samples_leaf", 2.0),
                ("max_features", 1.0),
                ("bootstrap", 1.0),
                ("binarize_labels", 0.0),
            ],
            LearnerKind::ExtremelyRandomizedTrees => &[
                ("n_trees", 100.0),
                ("max_depth", 12.0),
                ("min_samples_leaf", 2.0),
                ("max_features", 1.0),
                ("bootstrap", 0.0),
                ("binarize_labels", 0.0),
            ],
            LearnerKind::GradientBoostedTrees => &[
                ("n_estimators", 100.0),
                ("learning_rate", 0.1),
                ("max_depth", 3.0),
                ("min_samples_leaf", 1.0),
                ("binarize_labels", 0.0),
            ],
            LearnerKind::GaussianNaiveBayes => &[("var_smoothing", 1e-9)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Merges `overrides` into the defaults, rejecting unknown names.
    pub fn resolve_hyper(self, overrides: &Hyper) -> Result<Hyper, LearnerError> {
        let mut h = self.default_hyper();
        for (name, value) in overrides {
            match h.get_mut(name) {
                Some(slot) => *slot = *value,
                None => {
                    return Err(LearnerError::UnknownHyper {
                        kind: self,
                        name: name.clone(),
                    })
                }
            }
        }
        for (name, value) in &h {
            let bad = |reason: &str| LearnerError::BadHyper {
                name: name.clone(),
                value: *value,
                reason: reason.into(),
            };
            if !value.is_finite() {
                return Err(bad("not finite"));
            }
            match name.as_str() {
                "max_features" if !(*value > 0.0 && *value <= 1.0) => return Err(bad("must be in (0, 1]")),
                "n_trees" | "n_estimators" | "max_iter" | "min_samples_leaf" if *value < 1.0 => {
                    return Err(bad("must be at least 1"))
                }
                "learning_rate" if *value <= 0.0 => return Err(bad("must be positive")),
                "l2" | "tol" | "var_smoothing" | "max_depth" if *value < 0.0 => {
                    return Err(bad("must be non-negative"))
                }
                _ => {}
            }
        }
        Ok(h)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['-', ' '], "_");
        let kind = match norm.as_str() {
            "logistic_regression" | "lr" | "logistic" => LearnerKind::LogisticRegression,
            "decision_tree" | "dt" | "tree" => LearnerKind::DecisionTree,
            "random_forest" | "rf" => LearnerKind::RandomForest,
            "extremely_randomized_trees" | "extra_trees" | "ert" => LearnerKind::ExtremelyRandomizedTrees,
            "gradient_boosted_trees" | "gbt" | "gradient_boosting" => LearnerKind::GradientBoostedTrees,
            "gaussian_naive_bayes" | "gnb" | "naive_bayes" => LearnerKind::GaussianNaiveBayes,
            _ => return Err(LearnerError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

pub type Hyper = BTreeMap<String, f64>;

/// Rows of features with one target (an F-score) each.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self, LearnerError> {
        let set = TrainingSet { x, y, feature_names };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    fn validate(&self) -> Result<(), LearnerError> {
        if self.x.is_empty() {
            return Err(LearnerError::EmptyTrainingSet);
        }
        if self.x.len() != self.y.len() {
            return Err(LearnerError::Dimension {
                row: self.x.len().min(self.y.len()),
                expected: self.x.len(),
                found: self.y.len(),
            });
        }
        let d = self.feature_names.len();
        for (row, r) in self.x.iter().enumerate() {
            if r.len() != d {
                return Err(LearnerError::Dimension {
                    row,
                    expected: d,
                    found: r.len(),
                });
            }
        }
        if let Some((row, &value)) = self.y.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(LearnerError::BadLabel { row, value });
        }
        Ok(())
    }

    /// The subset of rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// The same rows restricted to the named columns.
    pub fn project(&self, names: &[String]) -> Option<TrainingSet> {
        let cols: Option<Vec<usize>> = names
            .iter()
            .map(|n| self.feature_names.iter().position(|f| f == n))
            .collect();
        let cols = cols?;
        Some(TrainingSet {
            x: self.x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect(),
            y: self.y.clone(),
            feature_names: names.to_vec(),
        })
    }
}

/// Per-feature min-max scaling; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x {
            for j in 0..d {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
        MinMaxScaler { min, range }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.range))
            .map(|(v, (lo, r))| if *r > 0.0 { (v - lo) / r } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum Model {
    Constant { value: f64 },
    Logistic(LogisticModel),
    /// Mean of the trees' outputs.
    Forest { trees: Vec<Tree> },
    /// `init + learning_rate * sum of the trees' outputs`.
    Boosted { init: f64, learning_rate: f64, trees: Vec<Tree> },
    NaiveBayes(NaiveBayesModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Parameters {
    scaler: MinMaxScaler,
    #[serde(flatten)]
    model: Model,
}

/// A trained model for one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub kind: LearnerKind,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub hyper: Hyper,
    parameters: Parameters,
}

fn tree_params(h: &Hyper) -> TreeParams {
    TreeParams {
        max_depth: h["max_depth"] as usize,
        min_samples_leaf: h["min_samples_leaf"] as usize,
        max_features: h.get("max_features").copied().unwrap_or(1.0),
        random_splits: h.get("random_splits").copied().unwrap_or(0.0) > 0.0,
    }
}

fn binarize(y: &[f64]) -> Vec<f64> {
    y.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect()
}

fn fit_forest(x: &[Vec<f64>], y: &[f64], h: &Hyper, seed: u64, random_splits: bool) -> Vec<Tree> {
    let mut params = tree_params(h);
    params.random_splits = random_splits;
    let n_trees = h["n_trees"] as usize;
    let bootstrap = h["bootstrap"] > 0.0;
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(rng::derive_index(seed, t as u64));
            let idx: Vec<usize> = if bootstrap {
                (0..x.len()).map(|_| r.random_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            Tree::fit(x, y, idx, &params, &mut r)
        })
        .collect()
}

/// Trains a predictor. Unknown hyperparameters are rejected; degenerate labels
/// (a single class for classifiers, a single value otherwise) give a constant
/// predictor at the label mean.
pub fn train(kind: LearnerKind, data: &TrainingSet, hyper: &Hyper, seed: u64) -> Result<Predictor, LearnerError> {
    data.validate()?;
    let hyper = kind.resolve_hyper(hyper)?;
    let scaler = MinMaxScaler::fit(&data.x);
    let x: Vec<Vec<f64>> = data.x.iter().map(|r| scaler.transform(r)).collect();
    let binarized = matches!(kind, LearnerKind::LogisticRegression | LearnerKind::GaussianNaiveBayes)
        || hyper.get("binarize_labels").is_some_and(|v| *v > 0.0);
    let y = if binarized { binarize(&data.y) } else { data.y.clone() };
    let mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
    let degenerate = y.iter().all(|v| *v == y[0]);

    let model = if degenerate {
        log::warn!(
            "{kind}: all {} training labels are {}, using a constant predictor ({mean:.4})",
            y.len(),
            y[0]
        );
        Model::Constant { value: mean }
    } else {
        match kind {
            LearnerKind::LogisticRegression => Model::Logistic(LogisticModel::fit(
                &x,
                &y,
                &LogisticParams {
                    learning_rate: hyper["learning_rate"],
                    l2: hyper["l2"],
                    max_iter: hyper["max_iter"] as usize,
                    tol: hyper["tol"],
                },
            )),
            LearnerKind::DecisionTree => {
                let mut r = rng::stream(rng::derive_index(seed, 0));
                Model::Forest {
                    trees: vec![Tree::fit(&x, &y, (0..x.len()).collect(), &tree_params(&hyper), &mut r)],
                }
            }
            LearnerKind::RandomForest => Model::Forest {
                trees: fit_forest(&x, &y, &hyper, seed, false),
            },
            LearnerKind::ExtremelyRandomizedTrees => Model::Forest {
                trees: fit_forest(&x, &y, &hyper, seed, true),
            },
            LearnerKind::GradientBoostedTrees => {
                let init = y.iter().sum::<f64>() / y.len() as f64;
                let lr = hyper["learning_rate"];
                let params = tree_params(&hyper);
                let mut pred = vec![init; y.len()];
                let mut trees = Vec::new();
                for t in 0..hyper["n_estimators"] as usize {
                    let residual: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
                    let mut r = rng::stream(rng::derive_index(seed, t as u64));
                    let tree = Tree::fit(&x, &residual, (0..x.len()).collect(), &params, &mut r);
                    for (p, row) in pred.iter_mut().zip(&x) {
                        *p += lr * tree.predict(row);
                    }
                    trees.push(tree);
                }
                Model::Boosted {
                    init,
                    learning_rate: lr,
                    trees,
                }
            }
            LearnerKind::GaussianNaiveBayes => {
                let labels: Vec<bool> = y.iter().map(|v| *v > 0.5).collect();
                Model::NaiveBayes(NaiveBayesModel::fit(&x, &labels, hyper["var_smoothing"]))
            }
        }
    };
    Ok(Predictor {
        kind,
        feature_names: data.feature_names.clone(),
        seed,
        hyper,
        parameters: Parameters { scaler, model },
    })
}

impl Predictor {
    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.parameters.model, Model::Constant { .. })
    }

    /// Expected F-score in [0, 1].
    pub fn predict(&self, row: &[f64]) -> Result<f64, LearnerError> {
        if row.len() != self.dimension() {
            return Err(LearnerError::Dimension {
                row: 0,
                expected: self.dimension(),
                found: row.len(),
            });
        }
        let x = self.parameters.scaler.transform(row);
        let raw = match &self.parameters.model {
            Model::Constant { value } => *value,
            Model::Logistic(m) => m.predict(&x),
            Model::Forest { trees } => trees.iter().map(|t| t.predict(&x)).sum::<f64>() / trees.len() as f64,
            Model::Boosted {
                init,
                learning_rate,
                trees,
            } => init + learning_rate * trees.iter().map(|t| t.predict(&x)).sum::<f64>(),
            Model::NaiveBayes(m) => m.predict(&x),
        };
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Scores a named feature vector, projecting it onto this predictor's
    /// features when it carries more columns.
    pub fn score(&self, fv: &FeatureVector) -> Result<f64, LearnerError> {
        if fv.names == self.feature_names {
            return self.predict(&fv.values);
        }
        let projected = fv
            .select(&self.feature_names)
            .map_err(|e| LearnerError::FeatureMismatch(e.to_string()))?;
        self.predict(&projected.values)
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, LearnerError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Coefficients of a logistic model, in feature order.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.parameters.model {
            Model::Logistic(m) => Some(&m.weights),
            _ => None,
        }
    }

    pub fn logistic(&self) -> Option<&LogisticModel> {
        match &self.parameters.model {
            Model::Logistic(m) => Some(m),
            _ => None,
        }
    }

    pub fn scaler(&self) -> &MinMaxScaler {
        &self.parameters.scaler
    }

    pub fn to_json(&self) -> Result<String, LearnerError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a saved predictor; unknown kinds and shapes are rejected.
    pub fn from_json(text: &str) -> Result<Predictor, LearnerError> {
        let p: Predictor = serde_json::from_str(text)?;
        let d = p.dimension();
        let s = &p.parameters.scaler;
        if s.min.len() != d || s.range.len() != d {
            return Err(LearnerError::FeatureNames {
                expected: s.min.len(),
                features: d,
            });
        }
        let trees: &[Tree] = match &p.parameters.model {
            Model::Forest { trees } | Model::Boosted { trees, .. } => trees,
            _ => &[],
        };
        if trees.iter().any(|t| t.nodes.is_empty() || t.max_feature_index().is_some_and(|f| f >= d)) {
            return Err(LearnerError::FeatureNames {
                expected: d,
                features: d,
            });
        }
        if let Model::Logistic(m) = &p.parameters.model {
            if m.weights.len() != d {
                return Err(LearnerError::FeatureNames {
                    expected: m.weights.len(),
                    features: d,
                });
            }
        }
        Ok(p)
    }
}

/// Mean decrease in impurity per feature (in feature order), normalised to
/// sum to 1.
pub fn gini_importance(predictor: &Predictor) -> Result<Vec<(String, f64)>, LearnerError> {
    let imp = impurity_importance(predictor)?;
    Ok(predictor.feature_names.iter().cloned().zip(imp).collect())
}

/// Per-tree impurity decreases, averaged over trees, normalised to sum to 1.
pub fn impurity_importance(predictor: &Predictor) -> Result<Vec<f64>, LearnerError> {
    let d = predictor.dimension();
    let trees: &[Tree] = match &predictor.parameters.model {
        Model::Forest { trees } | Model::Boosted { trees, .. } => trees,
        Model::Constant { .. } if predictor.kind.is_tree_based() => return Err(LearnerError::NoSplits),
        _ => return Err(LearnerError::NotTreeBased { kind: predictor.kind }),
    };
    if !trees.iter().any(Tree::has_splits) {
        return Err(LearnerError::NoSplits);
    }
    let mut sum = vec![0.0; d];
    for t in trees {
        for (s, v) in sum.iter_mut().zip(t.impurity_decrease(d)) {
            *s += v / trees.len() as f64;
        }
    }
    let total: f64 = sum.iter().sum();
    if total <= 0.0 {
        return Err(LearnerError::NoSplits);
    }
    Ok(sum.into_iter().map(|v| v / total).collect())
}

/// One train/test partition of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and deals indices round-robin into `k` test
/// folds; fold sizes differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>, LearnerError> {
    if k < 2 || n < k {
        return Err(LearnerError::BadFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed));
    let mut tests = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        tests[pos % k].push(i);
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            Fold {
                train: (0..n).filter(|&i| !in_test[i]).collect(),
                test,
            }
        })
        .collect())
}

/// Fold assignment by question id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn new<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<FoldPlan, LearnerError> {
        let folds = kfold(ids.len(), k, seed)?;
        let mut assignments = BTreeMap::new();
        for (f, fold) in folds.iter().enumerate() {
            for &i in &fold.test {
                assignments.insert(ids[i].as_ref().to_string(), f);
            }
        }
        Ok(FoldPlan { k, assignments })
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> TrainingSet {
        TrainingSet::new(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0.0, 1.0, 1.0, 0.0],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn unknown_hyper_is_rejected() {
        let mut h = Hyper::new();
        h.insert("depth".into(), 3.0);
        assert!(matches!(
            train(LearnerKind::DecisionTree, &xor(), &h, 1),
            Err(LearnerError::UnknownHyper { .. })
        ));
    }

    #[test]
    fn degenerate_labels_give_constant_prior() {
        let set = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![0.2, 0.4], vec!["a".into()]).unwrap();
        let p = train(LearnerKind::LogisticRegression, &set, &Hyper::new(), 0).unwrap();
        assert!(p.is_constant());
        assert!((p.predict(&[0.7]).unwrap() - 0.3).abs() < 1e-12);
        assert!(matches!(gini_importance(&p), Err(LearnerError::NotTreeBased { .. })));
    }

    #[test]
    fn trees_fit_xor() {
        let p = train(LearnerKind::DecisionTree, &xor(), &Hyper::new(), 5).unwrap();
        assert_eq!(p.predict(&[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(p.predict(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn kfold_partitions() {
        let folds = kfold(10, 3, 9).unwrap();
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train.len() + f.test.len(), 10);
        }
        assert!(kfold(3, 4, 0).is_err());
        assert!(kfold(3, 1, 0).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.as_str().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("svm".parse::<LearnerKind>().is_err());
    }
}
