use rand::seq::SliceRandom;

use super::model::{CnnModel, Gradients};
use super::Tensor;
use crate::{matrix, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(config: AdamConfig, model: &CnnModel) -> Self {
        let zeros: Gradients = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self { config, step: 0, m: zeros.clone(), v: zeros }
    }

    /// Bias-corrected update of `model` with gradients `g`.
    pub fn apply(&mut self, model: &mut CnnModel, g: &Gradients) {
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in model.params_mut().into_iter().zip(g).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= learning_rate * mh / (vh.sqrt() + epsilon);
            }
        }
    }
}

/// One optimisation step on the batch-mean cross-entropy. Returns the mean
/// loss and the number of correct predictions, both measured before the update.
pub fn backward_and_step(model: &mut CnnModel, adam: &mut Adam, batch: &[&Tensor], labels: &[usize]) -> Result<(f64, usize)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (loss, correct, mut grads) = model.batch_gradients(batch, labels)?;
    let scale = 1.0 / batch.len() as f64;
    grads.iter_mut().flatten().for_each(|g| *g *= scale);
    adam.apply(model, &grads);
    Ok((loss * scale, correct))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 25, batch_size: 16, adam: AdamConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss and accuracy over the epoch's batches, each measured before its update.
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Epoch (1-based) whose parameters were kept; 0 means the initial model.
    pub best_epoch: usize,
}

impl History {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.train_acc,
                opt(e.val_loss),
                opt(e.val_acc)
            ));
        }
        out
    }
}

/// Mean cross-entropy and accuracy of `model` on a labelled set.
pub fn evaluate(model: &CnnModel, xs: &[Tensor], labels: &[usize]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != labels.len() {
        return Err(Error::LengthMismatch(xs.len(), labels.len()));
    }
    use rayon::prelude::*;
    let probs: Vec<Vec<f64>> = xs.par_iter().map(|x| model.forward(x)).collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (p, &y) in probs.iter().zip(labels) {
        loss += super::ops::cross_entropy(p, y);
        correct += usize::from(matrix::argmax(p) == y);
    }
    let n = xs.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mini-batch Adam training. With a validation set the parameters of the
/// epoch with the highest validation accuracy are returned (earliest on
/// ties); otherwise the final parameters.
pub fn train(
    mut model: CnnModel,
    xs: &[Tensor],
    labels: &[usize],
    validation: Option<(&[Tensor], &[usize])>,
    config: &TrainConfig,
) -> Result<(CnnModel, History)> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != labels.len() {
        return Err(Error::LengthMismatch(xs.len(), labels.len()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    if labels.iter().any(|&y| y >= model.n_classes) {
        return Err(Error::InvalidInput("label outside the model's class range".into()));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }
    let mut adam = Adam::new(config.adam, &model);
    let mut best: Option<(f64, CnnModel)> = None;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, epoch as u64));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Tensor> = chunk.iter().map(|&i| &xs[i]).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, c) = backward_and_step(&mut model, &mut adam, &batch, &ys)?;
            loss_sum += loss * chunk.len() as f64;
            correct += c;
        }
        let n = xs.len() as f64;
        let (val_loss, val_acc) = match validation {
            Some((vx, vy)) if !vx.is_empty() => {
                let (l, a) = evaluate(&model, vx, vy)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        if let Some(acc) = val_acc {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
                history.best_epoch = epoch;
            }
        } else {
            history.best_epoch = epoch;
        }
        history.epochs.push(EpochStats { epoch, train_loss: loss_sum / n, train_acc: correct as f64 / n, val_loss, val_acc });
    }
    Ok((best.map(|(_, m)| m).unwrap_or(model), history))
}
