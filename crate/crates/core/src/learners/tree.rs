use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng as _;

use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    All,
    /// `max(1, floor(sqrt(d)))` features per split.
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_leaf_nodes: Option<usize>,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
}

impl TreeParams {
    pub fn decision_tree() -> Self {
        Self { criterion: Criterion::Entropy, max_leaf_nodes: Some(300), max_depth: None, max_features: MaxFeatures::All }
    }

    pub fn forest_member() -> Self {
        Self { criterion: Criterion::Gini, max_leaf_nodes: None, max_depth: None, max_features: MaxFeatures::Sqrt }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Class distribution for classifiers, a single weight for regressors.
    Leaf { value: Vec<f64> },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary tree stored as a node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_value(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Grows a classification tree on the rows listed in `samples`
    /// (duplicates allowed, as produced by bootstrapping).
    ///
    /// Pending leaves are expanded best-first by impurity decrease, so a
    /// leaf budget keeps the most useful splits. Among equally good splits
    /// the lowest feature index wins, then the lowest threshold. Thresholds
    /// are midpoints between consecutive distinct values.
    pub fn fit_classifier(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        samples: &[usize],
        p: &TreeParams,
        rng: &mut crate::rng::Rng,
    ) -> Tree {
        let builder = ClassBuilder { x, y, n_classes, p };
        let max_leaves = p.max_leaf_nodes.unwrap_or(usize::MAX).max(1);
        let mut nodes = Vec::new();
        let mut heap = BinaryHeap::new();
        let root = builder.pending(samples.to_vec(), 0, 0, rng);
        nodes.push(TreeNode::Leaf { value: root.value.clone() });
        let mut leaves = 1;
        if root.split.is_some() {
            heap.push(root);
        }
        while leaves < max_leaves {
            let Some(node) = heap.pop() else { break };
            let split = node.split.expect("only splittable nodes are queued");
            let (l_idx, r_idx): (Vec<usize>, Vec<usize>) =
                node.samples.iter().partition(|&&s| x.get(s, split.feature) <= split.threshold);
            let (l_id, r_id) = (nodes.len(), nodes.len() + 1);
            nodes[node.id] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left: l_id, right: r_id };
            for (id, idx) in [(l_id, l_idx), (r_id, r_idx)] {
                let child = builder.pending(idx, id, node.depth + 1, rng);
                nodes.push(TreeNode::Leaf { value: child.value.clone() });
                if child.split.is_some() {
                    heap.push(child);
                }
            }
            leaves += 1;
        }
        Tree { nodes }
    }

    /// Grows a second-order regression tree depth-first. `grad` and `hess`
    /// are indexed by row; only rows in `samples` take part. Leaves hold
    /// `-G / (H + lambda)`.
    pub fn fit_regression(x: &Matrix, grad: &[f64], hess: &[f64], samples: &[usize], p: &RegressionParams) -> Tree {
        let mut nodes = Vec::new();
        grow_regression(x, grad, hess, samples.to_vec(), 0, p, &mut nodes);
        Tree { nodes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Split {
    feature: usize,
    threshold: f64,
    /// Impurity decrease, weighted by sample count.
    gain: f64,
}

struct Pending {
    id: usize,
    depth: usize,
    samples: Vec<usize>,
    value: Vec<f64>,
    split: Option<Split>,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Max-heap: larger gain first, then the older (lower id) node.
    fn cmp(&self, other: &Self) -> Ordering {
        let g = |p: &Pending| p.split.map_or(f64::NEG_INFINITY, |s| s.gain);
        g(self).total_cmp(&g(other)).then(other.id.cmp(&self.id))
    }
}

struct ClassBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    p: &'a TreeParams,
}

impl ClassBuilder<'_> {
    fn pending(&self, samples: Vec<usize>, id: usize, depth: usize, rng: &mut crate::rng::Rng) -> Pending {
        let mut counts = vec![0.0; self.n_classes];
        for &s in &samples {
            counts[self.y[s]] += 1.0;
        }
        let n = samples.len() as f64;
        let value: Vec<f64> = counts.iter().map(|c| c / n).collect();
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_ok = self.p.max_depth.is_none_or(|m| depth < m);
        let split = if pure || samples.len() < 2 || !depth_ok { None } else { self.best_split(&samples, &counts, rng) };
        Pending { id, depth, samples, value, split }
    }

    /// `n * impurity` of a node with the given class counts.
    fn weighted_impurity(&self, counts: &[f64], n: f64) -> f64 {
        if n == 0.0 {
            return 0.0;
        }
        match self.p.criterion {
            Criterion::Gini => n - counts.iter().map(|c| c * c).sum::<f64>() / n,
            Criterion::Entropy => {
                let s: f64 = counts.iter().filter(|&&c| c > 0.0).map(|&c| c * c.ln()).sum();
                (n * n.ln() - s) / std::f64::consts::LN_2
            }
        }
    }

    fn best_split(&self, samples: &[usize], counts: &[f64], rng: &mut crate::rng::Rng) -> Option<Split> {
        let d = self.x.cols();
        let n = samples.len() as f64;
        let parent = self.weighted_impurity(counts, n);
        let mut order: Vec<usize> = (0..d).collect();
        let budget = match self.p.max_features {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
        };
        let mut best: Option<Split> = None;
        let mut visited_informative = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
        for pos in 0..d {
            if visited_informative >= budget {
                break;
            }
            if budget < d {
                let j = rng.random_range(pos..d);
                order.swap(pos, j);
            }
            let f = order[pos];
            sorted.clear();
            sorted.extend(samples.iter().map(|&s| (self.x.get(s, f), self.y[s])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            visited_informative += 1;
            let mut left = vec![0.0; self.n_classes];
            let mut right = counts.to_vec();
            for i in 0..sorted.len() - 1 {
                let c = sorted[i].1;
                left[c] += 1.0;
                right[c] -= 1.0;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let child = self.weighted_impurity(&left, nl) + self.weighted_impurity(&right, n - nl);
                let threshold = midpoint(sorted[i].0, sorted[i + 1].0);
                let cand = Split { feature: f, threshold, gain: parent - child };
                if better(&cand, best.as_ref()) {
                    best = Some(cand);
                }
            }
        }
        best
    }
}

fn better(cand: &Split, best: Option<&Split>) -> bool {
    match best {
        None => true,
        Some(b) => match cand.gain.total_cmp(&b.gain) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (cand.feature, cand.threshold) < (b.feature, b.threshold),
        },
    }
}

/// Midpoint that stays strictly below `b` even when `a` and `b` are adjacent floats.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

/// Smallest loss reduction that counts as a split.
const MIN_SPLIT_GAIN: f64 = 1e-6;

fn grow_regression(
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    samples: Vec<usize>,
    depth: usize,
    p: &RegressionParams,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let id = nodes.len();
    let g: f64 = samples.iter().map(|&s| grad[s]).sum();
    let h: f64 = samples.iter().map(|&s| hess[s]).sum();
    nodes.push(TreeNode::Leaf { value: vec![-g / (h + p.lambda)] });
    if depth >= p.max_depth || samples.len() < 2 {
        return id;
    }
    let score = |g: f64, h: f64| g * g / (h + p.lambda);
    let parent = score(g, h);
    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
    for f in 0..x.cols() {
        sorted.clear();
        sorted.extend(samples.iter().map(|&s| (x.get(s, f), s)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..sorted.len() - 1 {
            let s = sorted[i].1;
            gl += grad[s];
            hl += hess[s];
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent) - p.gamma;
            let cand = Split { feature: f, threshold: midpoint(sorted[i].0, sorted[i + 1].0), gain };
            if better(&cand, best.as_ref()) {
                best = Some(cand);
            }
        }
    }
    let Some(split) = best.filter(|s| s.gain > MIN_SPLIT_GAIN) else { return id };
    let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&s| x.get(s, split.feature) <= split.threshold);
    drop(samples);
    let left = grow_regression(x, grad, hess, l, depth + 1, p, nodes);
    let right = grow_regression(x, grad, hess, r, depth + 1, p, nodes);
    nodes[id] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
    id
}
