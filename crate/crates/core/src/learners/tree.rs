//! Regression CART with squared-error impurity, optionally with randomised
//! split thresholds (the extremely randomised trees variant).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each node, in (0, 1].
    pub max_features: f64,
    pub random_splits: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub(crate) enum Node {
    Leaf {
        value: f64,
        samples: usize,
        impurity: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        impurity: f64,
    },
}

impl Node {
    fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            Node::Leaf { impurity, .. } | Node::Split { impurity, .. } => *impurity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    pub nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    child_sse: f64,
}

fn mean_and_sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let sse = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>();
    (mean, sse)
}

/// Best cut of one feature given the node's samples sorted by that feature.
fn best_exhaustive(x: &[Vec<f64>], y: &[f64], order: &[usize], feature: usize, min_leaf: usize) -> Option<Candidate> {
    let n = order.len();
    let total: f64 = order.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
    let (mut sum_l, mut sq_l) = (0.0, 0.0);
    let mut best: Option<Candidate> = None;
    for cut in 1..n {
        let i = order[cut - 1];
        sum_l += y[i];
        sq_l += y[i] * y[i];
        let (lo, hi) = (x[i][feature], x[order[cut]][feature]);
        if lo == hi || cut < min_leaf || n - cut < min_leaf {
            continue;
        }
        let (nl, nr) = (cut as f64, (n - cut) as f64);
        let sse_l = (sq_l - sum_l * sum_l / nl).max(0.0);
        let sum_r = total - sum_l;
        let sse_r = (total_sq - sq_l - sum_r * sum_r / nr).max(0.0);
        let child_sse = sse_l + sse_r;
        if best.as_ref().is_none_or(|b| child_sse < b.child_sse) {
            best = Some(Candidate {
                feature,
                threshold: lo + (hi - lo) / 2.0,
                child_sse,
            });
        }
    }
    best
}

fn random_cut(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Candidate> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in idx {
        lo = lo.min(x[i][feature]);
        hi = hi.max(x[i][feature]);
    }
    if lo >= hi {
        return None;
    }
    let threshold = rng.random_range(lo..hi);
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
    if left.len() < min_leaf.max(1) || right.len() < min_leaf.max(1) {
        return None;
    }
    Some(Candidate {
        feature,
        threshold,
        child_sse: mean_and_sse(y, &left).1 + mean_and_sse(y, &right).1,
    })
}

/// Samples reaching a node. Exhaustive search keeps one index list per
/// feature, each sorted by that feature, and partitions them stably on split
/// so no node ever re-sorts.
enum NodeSamples {
    Sorted(Vec<Vec<usize>>),
    Plain(Vec<usize>),
}

impl NodeSamples {
    fn any(&self) -> &[usize] {
        match self {
            NodeSamples::Sorted(lists) => &lists[0],
            NodeSamples::Plain(idx) => idx,
        }
    }

    fn split(self, goes_left: impl Fn(usize) -> bool) -> (NodeSamples, NodeSamples) {
        match self {
            NodeSamples::Sorted(lists) => {
                let (l, r): (Vec<_>, Vec<_>) = lists
                    .into_iter()
                    .map(|list| list.into_iter().partition::<Vec<usize>, _>(|&i| goes_left(i)))
                    .unzip();
                (NodeSamples::Sorted(l), NodeSamples::Sorted(r))
            }
            NodeSamples::Plain(idx) => {
                let (l, r) = idx.into_iter().partition(|&i| goes_left(i));
                (NodeSamples::Plain(l), NodeSamples::Plain(r))
            }
        }
    }
}

impl Tree {
    pub fn fit(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, params: &TreeParams, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        let n_features = x.first().map_or(0, Vec::len);
        let samples = if params.random_splits || n_features == 0 {
            NodeSamples::Plain(idx)
        } else {
            NodeSamples::Sorted(
                (0..n_features)
                    .map(|f| {
                        let mut order = idx.clone();
                        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
                        order
                    })
                    .collect(),
            )
        };
        tree.grow(x, y, samples, 0, n_features, params, rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        x: &[Vec<f64>],
        y: &[f64],
        samples: NodeSamples,
        depth: usize,
        n_features: usize,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let idx = samples.any();
        let (mean, sse) = mean_and_sse(y, idx);
        let count = idx.len();
        let impurity = sse / count as f64;
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean,
            samples: count,
            impurity,
        });
        if depth >= params.max_depth || sse <= 1e-12 || count < 2 * params.min_samples_leaf.max(1) {
            return at;
        }

        let mut features: Vec<usize> = (0..n_features).collect();
        let take = ((params.max_features * n_features as f64).round() as usize).clamp(1, n_features.max(1));
        if take < n_features {
            features.shuffle(rng);
            features.truncate(take);
            features.sort_unstable();
        }
        let mut best: Option<Candidate> = None;
        for &f in &features {
            let cand = match &samples {
                NodeSamples::Sorted(lists) => best_exhaustive(x, y, &lists[f], f, params.min_samples_leaf),
                NodeSamples::Plain(idx) => random_cut(x, y, idx, f, params.min_samples_leaf, rng),
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.child_sse < b.child_sse) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return at;
        };
        let (left_s, right_s) = samples.split(|i| x[i][split.feature] <= split.threshold);
        let left = self.grow(x, y, left_s, depth + 1, n_features, params, rng);
        let right = self.grow(x, y, right_s, depth + 1, n_features, params, rng);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            samples: count,
            impurity,
        };
        at
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn has_splits(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Split { .. }))
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Weighted impurity decrease per feature, not normalised:
    /// `N_t / N * (imp_t - N_l / N_t * imp_l - N_r / N_t * imp_r)` summed over
    /// the nodes that split on each feature.
    pub fn impurity_decrease(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        let total = self.nodes.first().map_or(0, Node::samples) as f64;
        for node in &self.nodes {
            if let Node::Split {
                feature,
                left,
                right,
                samples,
                impurity,
                ..
            } = node
            {
                let (l, r) = (&self.nodes[*left], &self.nodes[*right]);
                let n = *samples as f64;
                let dec = n * impurity - l.samples() as f64 * l.impurity() - r.samples() as f64 * r.impurity();
                out[*feature] += dec / total;
            }
        }
        out
    }
}
