use rand::seq::SliceRandom;

use super::FeatureFrame;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn train_test(train_fraction: f64, seed: u64) -> Self {
        Self { train_fraction, validation_fraction: 0.0, seed, stratified: true }
    }

    pub fn three_way(train_fraction: f64, validation_fraction: f64, seed: u64) -> Self {
        Self { train_fraction, validation_fraction, seed, stratified: true }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.train_fraction > 0.0
            && self.train_fraction < 1.0
            && (0.0..1.0).contains(&self.validation_fraction)
            && self.train_fraction + self.validation_fraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid split fractions {} / {}",
                self.train_fraction, self.validation_fraction
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: FeatureFrame,
    pub validation: Option<FeatureFrame>,
    pub test: FeatureFrame,
}

/// Row indices of each partition, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(frame: &FeatureFrame, spec: SplitSpec) -> Result<Splits> {
    let labels = frame.require_labels()?;
    let idx = split_indices(labels, frame.n_classes(), spec)?;
    Ok(Splits {
        train: frame.select_rows(&idx.train),
        validation: (spec.validation_fraction > 0.0).then(|| frame.select_rows(&idx.validation)),
        test: frame.select_rows(&idx.test),
    })
}

/// Seeded partition of `0..labels.len()`. Stratified mode allocates each
/// class's quota by largest remainder so partition totals are exact and
/// per-class counts stay within one of the ideal share.
pub fn split_indices(labels: &[usize], n_classes: usize, spec: SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let n = labels.len();
    let n_train = (n as f64 * spec.train_fraction).round() as usize;
    let n_val = (n as f64 * spec.validation_fraction).round() as usize;
    let mut rng = rng::seeded(spec.seed);

    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l].push(i);
        }
        for members in &mut by_class {
            members.shuffle(&mut rng);
        }
        let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
        let train_q = apportion(&sizes, spec.train_fraction, n_train.min(n), &sizes);
        let remaining: Vec<usize> = sizes.iter().zip(&train_q).map(|(s, t)| s - t).collect();
        let val_q = apportion(&sizes, spec.validation_fraction, n_val.min(remaining.iter().sum()), &remaining);
        for (c, members) in by_class.iter().enumerate() {
            let (t, v) = (train_q[c], val_q[c]);
            train.extend_from_slice(&members[..t]);
            validation.extend_from_slice(&members[t..t + v]);
            test.extend_from_slice(&members[t + v..]);
        }
    } else {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let n_val = n_val.min(n.saturating_sub(n_train));
        train.extend_from_slice(&perm[..n_train]);
        validation.extend_from_slice(&perm[n_train..n_train + n_val]);
        test.extend_from_slice(&perm[n_train + n_val..]);
    }
    if train.is_empty() {
        return Err(Error::EmptyPartition("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptyPartition("test"));
    }
    if spec.validation_fraction > 0.0 && validation.is_empty() {
        return Err(Error::EmptyPartition("validation"));
    }
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, validation, test })
}

/// Largest-remainder apportionment of `total` over classes with ideal share
/// `sizes[c] * fraction`, never exceeding `caps[c]`. Ties favour lower classes.
fn apportion(sizes: &[usize], fraction: f64, total: usize, caps: &[usize]) -> Vec<usize> {
    let ideal: Vec<f64> = sizes.iter().map(|&s| s as f64 * fraction).collect();
    let mut quota: Vec<usize> = ideal.iter().zip(caps).map(|(&q, &cap)| (q.floor() as usize).min(cap)).collect();
    let mut assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - quota[a] as f64;
        let fb = ideal[b] - quota[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    while assigned < total {
        let before = assigned;
        for &c in &order {
            if assigned == total {
                break;
            }
            if quota[c] < caps[c] {
                quota[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    while assigned > total {
        // floors can only exceed the total through rounding of `total` itself
        let c = (0..quota.len()).rev().find(|&c| quota[c] > 0).expect("positive quota");
        quota[c] -= 1;
        assigned -= 1;
    }
    quota
}
