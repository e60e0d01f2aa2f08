use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{Tree, TreeParams};
use crate::{rng, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_estimators: 1500, tree: TreeParams::forest_member(), bootstrap: true }
    }
}

/// Bagged trees; the probability is the mean of the leaf class distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Tree `i` draws from its own stream derived from `(seed, i)`, so the
    /// result does not depend on how trees are scheduled across threads.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, p: &ForestParams, seed: u64) -> Self {
        let n = x.rows();
        let trees = (0..p.n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(seed, i as u64);
                let samples: Vec<usize> =
                    if p.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
                Tree::fit_classifier(x, y, n_classes, &samples, &p.tree, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub(super) fn proba_row(&self, row: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.leaf_value(row)) {
                *o += v;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= k);
    }
}
