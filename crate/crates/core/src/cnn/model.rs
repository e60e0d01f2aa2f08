use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::ops::{conv_backward, conv_forward, cross_entropy, maxpool, softmax};
use super::Tensor;
use crate::{matrix, rng, Error, Result};

/// Layer vocabulary. Convolutions are 3x3, stride 1, same padding; pooling
/// is 2x2 with stride 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2D { filters: usize },
    ReLU,
    MaxPool,
    Flatten,
    Dense { units: usize },
    Softmax,
}

/// Conv(16)-ReLU-Pool, Conv(32)-ReLU-Pool, Conv(64)-ReLU-Pool, Flatten,
/// Dense(128)-ReLU, Dense(classes)-Softmax.
pub fn default_architecture(classes: usize) -> Vec<LayerSpec> {
    use LayerSpec::*;
    vec![
        Conv2D { filters: 16 },
        ReLU,
        MaxPool,
        Conv2D { filters: 32 },
        ReLU,
        MaxPool,
        Conv2D { filters: 64 },
        ReLU,
        MaxPool,
        Flatten,
        Dense { units: 128 },
        ReLU,
        Dense { units: classes },
        Softmax,
    ]
}

/// VGG-16 topology with a `classes`-way head.
pub fn vgg16_architecture(classes: usize) -> Vec<LayerSpec> {
    use LayerSpec::*;
    let mut out = Vec::new();
    for (filters, reps) in [(64, 2), (128, 2), (256, 3), (512, 3), (512, 3)] {
        for _ in 0..reps {
            out.extend([Conv2D { filters }, ReLU]);
        }
        out.push(MaxPool);
    }
    out.extend([Flatten, Dense { units: 4096 }, ReLU, Dense { units: 4096 }, ReLU, Dense { units: classes }, Softmax]);
    out
}

/// Output shape of every layer for an input of `input` (h, w, c), checked
/// without allocating parameters. The last layer must be a softmax.
pub fn infer_shapes(input: [usize; 3], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>> {
    let mut shape = input.to_vec();
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput("input dimensions must be positive".into()));
    }
    let mut out = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let bad = |what: &str| Error::InvalidInput(format!("layer {i} ({spec:?}) {what}, got shape {shape:?}"));
        shape = match (*spec, shape.as_slice()) {
            (LayerSpec::Conv2D { filters }, &[h, w, _]) if filters > 0 => vec![h, w, filters],
            (LayerSpec::Conv2D { .. }, _) => return Err(bad("needs a rank-3 input and at least one filter")),
            (LayerSpec::ReLU, _) => shape.clone(),
            (LayerSpec::MaxPool, &[h, w, c]) => vec![h.div_ceil(2), w.div_ceil(2), c],
            (LayerSpec::MaxPool, _) => return Err(bad("needs a rank-3 input")),
            (LayerSpec::Flatten, s) => vec![s.iter().product()],
            (LayerSpec::Dense { units }, &[_]) if units > 0 => vec![units],
            (LayerSpec::Dense { .. }, _) => return Err(bad("needs a flat input and at least one unit")),
            (LayerSpec::Softmax, &[_]) if i + 1 == specs.len() => shape.clone(),
            (LayerSpec::Softmax, _) => return Err(bad("must be the final layer over a flat input")),
        };
        out.push(shape.clone());
    }
    match (specs.last(), out.last()) {
        (Some(LayerSpec::Softmax), Some(s)) if s[0] >= 2 => Ok(out),
        _ => Err(Error::InvalidInput("the network must end in a softmax over at least two classes".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `kernel` is laid out `3 x 3 x in_channels x filters`.
    Conv2D { in_channels: usize, filters: usize, kernel: Vec<f64>, bias: Vec<f64> },
    ReLU,
    MaxPool,
    Flatten,
    /// `weights` is `units x inputs`, row-major.
    Dense { inputs: usize, units: usize, weights: Vec<f64>, bias: Vec<f64> },
    Softmax,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv2D { filters, .. } => LayerSpec::Conv2D { filters: *filters },
            Layer::ReLU => LayerSpec::ReLU,
            Layer::MaxPool => LayerSpec::MaxPool,
            Layer::Flatten => LayerSpec::Flatten,
            Layer::Dense { units, .. } => LayerSpec::Dense { units: *units },
            Layer::Softmax => LayerSpec::Softmax,
        }
    }
}

/// Per-parameter-tensor gradients, in [`CnnModel::params`] order.
pub type Gradients = Vec<Vec<f64>>;

/// An ordered layer stack ending in a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub input_shape: [usize; 3],
    pub layers: Vec<Layer>,
    pub n_classes: usize,
}

struct Trace {
    acts: Vec<Tensor>,
    pool_args: Vec<Vec<usize>>,
}

impl CnnModel {
    /// He-initialised weights (normal, variance `2 / fan_in`), zero biases.
    pub fn new(input_shape: [usize; 3], specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let shapes = infer_shapes(input_shape, specs)?;
        let mut rng = rng::seeded(seed);
        let mut prev = input_shape.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for (spec, shape) in specs.iter().zip(&shapes) {
            layers.push(match *spec {
                LayerSpec::Conv2D { filters } => {
                    let cin = prev[2];
                    let fan_in = 9 * cin;
                    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
                    let kernel = (0..fan_in * filters).map(|_| normal.sample(&mut rng)).collect();
                    Layer::Conv2D { in_channels: cin, filters, kernel, bias: vec![0.0; filters] }
                }
                LayerSpec::Dense { units } => {
                    let inputs = prev[0];
                    let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("finite std");
                    let weights = (0..inputs * units).map(|_| normal.sample(&mut rng)).collect();
                    Layer::Dense { inputs, units, weights, bias: vec![0.0; units] }
                }
                LayerSpec::ReLU => Layer::ReLU,
                LayerSpec::MaxPool => Layer::MaxPool,
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Softmax => Layer::Softmax,
            });
            prev = shape.clone();
        }
        Ok(Self { input_shape, layers, n_classes: prev[0] })
    }

    /// Rebuilds a model from stored layers, validating every shape.
    pub fn from_layers(input_shape: [usize; 3], layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(Layer::spec).collect();
        let shapes = infer_shapes(input_shape, &specs)?;
        let mut prev = input_shape.to_vec();
        for (i, (layer, shape)) in layers.iter().zip(&shapes).enumerate() {
            let ok = match layer {
                Layer::Conv2D { in_channels, filters, kernel, bias } => {
                    *in_channels == prev[2] && kernel.len() == 9 * in_channels * filters && bias.len() == *filters
                }
                Layer::Dense { inputs, units, weights, bias } => {
                    *inputs == prev[0] && weights.len() == inputs * units && bias.len() == *units
                }
                _ => true,
            };
            if !ok {
                return Err(Error::InvalidInput(format!("layer {i} parameters do not match its shape")));
            }
            prev = shape.clone();
        }
        Ok(Self { input_shape, layers, n_classes: prev[0] })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv2D { kernel, bias, .. } => out.extend([kernel.as_slice(), bias.as_slice()]),
                Layer::Dense { weights, bias, .. } => out.extend([weights.as_slice(), bias.as_slice()]),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv2D { kernel, bias, .. } => out.extend([kernel.as_mut_slice(), bias.as_mut_slice()]),
                Layer::Dense { weights, bias, .. } => out.extend([weights.as_mut_slice(), bias.as_mut_slice()]),
                _ => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape != self.input_shape {
            return Err(Error::InvalidInput(format!("input shape {:?}, model expects {:?}", x.shape, self.input_shape)));
        }
        Ok(())
    }

    fn trace(&self, x: &Tensor) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pool_args = Vec::new();
        acts.push(x.clone());
        for layer in &self.layers {
            let cur = acts.last().expect("input pushed");
            let next = match layer {
                Layer::Conv2D { in_channels, filters, kernel, bias } => {
                    let (h, w) = (cur.shape[0], cur.shape[1]);
                    let mut out = vec![0.0; h * w * filters];
                    conv_forward(&cur.data, h, w, *in_channels, kernel, bias, *filters, &mut out);
                    Tensor { shape: vec![h, w, *filters], data: out }
                }
                Layer::ReLU => super::ops::relu(cur),
                Layer::MaxPool => {
                    let (t, arg) = maxpool(cur).expect("shapes validated");
                    pool_args.push(arg);
                    t
                }
                Layer::Flatten => Tensor { shape: vec![cur.data.len()], data: cur.data.clone() },
                Layer::Dense { inputs, units, weights, bias } => {
                    let data = (0..*units)
                        .map(|u| {
                            bias[u] + weights[u * inputs..(u + 1) * inputs].iter().zip(&cur.data).map(|(a, b)| a * b).sum::<f64>()
                        })
                        .collect();
                    Tensor { shape: vec![*units], data }
                }
                Layer::Softmax => Tensor { shape: cur.shape.clone(), data: softmax(&cur.data) },
            };
            acts.push(next);
        }
        Trace { acts, pool_args }
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).acts.pop().expect("output").data)
    }

    pub fn predict_label(&self, x: &Tensor) -> Result<usize> {
        Ok(matrix::argmax(&self.forward(x)?))
    }

    /// Cross-entropy loss, probabilities and parameter gradients for one sample.
    pub fn loss_and_gradients(&self, x: &Tensor, label: usize) -> Result<(f64, Vec<f64>, Gradients)> {
        self.check_input(x)?;
        if label >= self.n_classes {
            return Err(Error::InvalidInput(format!("label {label} out of range")));
        }
        let trace = self.trace(x);
        let probs = trace.acts.last().expect("output").data.clone();
        let loss = cross_entropy(&probs, label);
        let mut grads: Vec<Vec<f64>> = self.params().iter().map(|p| vec![0.0; p.len()]).collect();
        let mut slot = grads.len();
        let mut pool_slot = trace.pool_args.len();
        // Softmax followed by cross-entropy: d loss / d logits = p - onehot.
        let mut g: Vec<f64> = probs.clone();
        g[label] -= 1.0;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.acts[l];
            g = match layer {
                Layer::Softmax => g,
                Layer::Dense { inputs, units, weights, .. } => {
                    slot -= 2;
                    let (dw, db) = two(&mut grads, slot);
                    let mut dx = vec![0.0; *inputs];
                    for u in 0..*units {
                        let gu = g[u];
                        db[u] += gu;
                        let wrow = &weights[u * inputs..(u + 1) * inputs];
                        let dwrow = &mut dw[u * inputs..(u + 1) * inputs];
                        for ((d, x), (dxi, w)) in dwrow.iter_mut().zip(&input.data).zip(dx.iter_mut().zip(wrow)) {
                            *d += gu * x;
                            *dxi += gu * w;
                        }
                    }
                    dx
                }
                Layer::ReLU => g.iter().zip(&input.data).map(|(gv, x)| if *x > 0.0 { *gv } else { 0.0 }).collect(),
                Layer::Flatten => g,
                Layer::MaxPool => {
                    pool_slot -= 1;
                    let mut dx = vec![0.0; input.data.len()];
                    for (gv, &src) in g.iter().zip(&trace.pool_args[pool_slot]) {
                        dx[src] += gv;
                    }
                    dx
                }
                Layer::Conv2D { in_channels, filters, kernel, .. } => {
                    slot -= 2;
                    let (dk, db) = two(&mut grads, slot);
                    let (h, w) = (input.shape[0], input.shape[1]);
                    conv_backward(&input.data, h, w, *in_channels, kernel, *filters, &g, dk, db)
                }
            };
        }
        Ok((loss, probs, grads))
    }

    /// Summed loss, correct-prediction count and summed gradients over a
    /// batch. Samples run in parallel; the reduction follows sample order.
    pub fn batch_gradients(&self, xs: &[&Tensor], labels: &[usize]) -> Result<(f64, usize, Gradients)> {
        if xs.len() != labels.len() {
            return Err(Error::LengthMismatch(xs.len(), labels.len()));
        }
        let per: Vec<(f64, Vec<f64>, Gradients)> =
            xs.par_iter().zip(labels.par_iter()).map(|(x, &y)| self.loss_and_gradients(x, y)).collect::<Result<_>>()?;
        let mut total: Gradients = self.params().iter().map(|p| vec![0.0; p.len()]).collect();
        let mut loss = 0.0;
        let mut correct = 0;
        for ((l, probs, g), &y) in per.iter().zip(labels) {
            loss += l;
            correct += usize::from(matrix::argmax(probs) == y);
            for (t, gi) in total.iter_mut().zip(g) {
                for (a, b) in t.iter_mut().zip(gi) {
                    *a += b;
                }
            }
        }
        Ok((loss, correct, total))
    }
}

fn two(grads: &mut [Vec<f64>], at: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = grads[at..at + 2].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes_across_resolutions() {
        for side in [32, 64, 128, 224, 256, 512, 800] {
            let shapes = infer_shapes([side, side, 1], &default_architecture(2)).unwrap();
            let q = side.div_ceil(2).div_ceil(2).div_ceil(2);
            assert_eq!(shapes[0], vec![side, side, 16]);
            assert_eq!(shapes[8], vec![q, q, 64]);
            assert_eq!(shapes[9], vec![q * q * 64]);
            assert_eq!(shapes.last().unwrap(), &vec![2]);
        }
    }

    #[test]
    fn vgg16_shapes() {
        let shapes = infer_shapes([224, 224, 3], &vgg16_architecture(2)).unwrap();
        let flat = shapes.iter().find(|s| s.len() == 1).unwrap();
        assert_eq!(flat, &vec![7 * 7 * 512]);
        let specs = vgg16_architecture(2);
        assert_eq!(specs.iter().filter(|s| matches!(s, LayerSpec::Conv2D { .. })).count(), 13);
        assert_eq!(specs.iter().filter(|s| matches!(s, LayerSpec::Dense { .. })).count(), 3);
    }

    #[test]
    fn invalid_stacks() {
        use LayerSpec::*;
        assert!(infer_shapes([8, 8, 1], &[Dense { units: 2 }, Softmax]).is_err());
        assert!(infer_shapes([8, 8, 1], &[Flatten, Dense { units: 2 }]).is_err());
        assert!(infer_shapes([8, 8, 1], &[Flatten, Softmax, Dense { units: 2 }, Softmax]).is_err());
        assert!(infer_shapes([8, 8, 1], &[Flatten, Dense { units: 1 }, Softmax]).is_err());
    }

    #[test]
    fn output_is_a_distribution() {
        let m = CnnModel::new([16, 16, 1], &default_architecture(3), 1).unwrap();
        let x = Tensor::new(vec![16, 16, 1], (0..256).map(|v| (v % 7) as f64 / 7.0).collect()).unwrap();
        let p = m.forward(&x).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.forward(&Tensor::zeros(vec![8, 8, 1])).is_err());
    }

    #[test]
    fn from_layers_round_trip() {
        let m = CnnModel::new([8, 8, 1], &default_architecture(2), 5).unwrap();
        let back = CnnModel::from_layers(m.input_shape, m.layers.clone()).unwrap();
        assert_eq!(back, m);
        let mut broken = m.layers.clone();
        if let Layer::Dense { bias, .. } = &mut broken[10] {
            bias.pop();
        }
        assert!(CnnModel::from_layers(m.input_shape, broken).is_err());
    }
}
