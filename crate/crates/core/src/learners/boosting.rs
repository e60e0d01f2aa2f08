use rand::Rng as _;

use super::logistic::sigmoid;
use super::tree::{RegressionParams, Tree, TreeNode};
use super::BinaryScorer;
use crate::{rng, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub min_child_weight: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 25,
            max_depth: 15,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            subsample: 0.7,
            min_child_weight: 1.0,
        }
    }
}

/// Second-order gradient boosting on the logistic loss. Leaf weights are
/// stored already multiplied by the learning rate, so the margin is
/// `base_margin + sum of leaf values`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl BoostedModel {
    /// Round `r` samples rows with its own stream derived from `(seed, r)`;
    /// each row is kept independently with probability `subsample`.
    pub fn fit(x: &Matrix, target: &[bool], p: &BoostParams, seed: u64) -> Self {
        let n = x.rows();
        let pos = target.iter().filter(|&&t| t).count() as f64 / n as f64;
        let pos = pos.clamp(1e-7, 1.0 - 1e-7);
        let base_margin = (pos / (1.0 - pos)).ln();
        let mut margin = vec![base_margin; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let tree_params = RegressionParams {
            max_depth: p.max_depth,
            lambda: p.lambda,
            gamma: p.gamma,
            min_child_weight: p.min_child_weight,
        };
        let mut trees = Vec::with_capacity(p.n_estimators);
        for round in 0..p.n_estimators {
            for i in 0..n {
                let prob = sigmoid(margin[i]);
                grad[i] = prob - if target[i] { 1.0 } else { 0.0 };
                hess[i] = (prob * (1.0 - prob)).max(1e-16);
            }
            let mut rng = rng::stream(seed, round as u64);
            let samples: Vec<usize> = if p.subsample >= 1.0 {
                (0..n).collect()
            } else {
                (0..n).filter(|_| rng.random::<f64>() < p.subsample).collect()
            };
            let mut tree = if samples.is_empty() {
                Tree { nodes: vec![TreeNode::Leaf { value: vec![0.0] }] }
            } else {
                Tree::fit_regression(x, &grad, &hess, &samples, &tree_params)
            };
            for node in &mut tree.nodes {
                if let TreeNode::Leaf { value } = node {
                    value[0] *= p.learning_rate;
                }
            }
            for (i, m) in margin.iter_mut().enumerate() {
                *m += tree.leaf_value(x.row(i))[0];
            }
            trees.push(tree);
        }
        Self { base_margin, trees }
    }

    /// Margin using only the first `rounds` trees.
    pub fn margin_after(&self, row: &[f64], rounds: usize) -> f64 {
        self.base_margin + self.trees.iter().take(rounds).map(|t| t.leaf_value(row)[0]).sum::<f64>()
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.margin_after(row, self.trees.len())
    }
}

impl BinaryScorer for BoostedModel {
    fn positive_probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}
