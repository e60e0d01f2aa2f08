use super::Tensor;
use crate::{Error, Result};

/// 3x3 same-padded cross-correlation. `kernels` has shape
/// `3 x 3 x in_channels x out_channels`; `bias` has one entry per output
/// channel. Output keeps the input's height and width.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor, bias: &[f64]) -> Result<Tensor> {
    let (h, w, cin) = input.hwc()?;
    let (kcin, cout) = match kernels.shape.as_slice() {
        &[3, 3, kc, co] => (kc, co),
        s => return Err(Error::InvalidInput(format!("kernel shape {s:?} is not 3x3xCinxCout"))),
    };
    if kcin != cin {
        return Err(Error::InvalidInput(format!("channel mismatch: input has {cin}, kernel expects {kcin}")));
    }
    if bias.len() != cout {
        return Err(Error::InvalidInput(format!("bias has {} entries for {cout} filters", bias.len())));
    }
    let mut out = vec![0.0; h * w * cout];
    conv_forward(&input.data, h, w, cin, &kernels.data, bias, cout, &mut out);
    Tensor::new(vec![h, w, cout], out)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_forward(x: &[f64], h: usize, w: usize, cin: usize, k: &[f64], bias: &[f64], cout: usize, out: &mut [f64]) {
    for i in 0..h {
        for j in 0..w {
            let o = &mut out[(i * w + j) * cout..(i * w + j + 1) * cout];
            o.copy_from_slice(bias);
            for ky in 0..3 {
                let Some(p) = (i + ky).checked_sub(1).filter(|&p| p < h) else { continue };
                for kx in 0..3 {
                    let Some(q) = (j + kx).checked_sub(1).filter(|&q| q < w) else { continue };
                    let px = &x[(p * w + q) * cin..(p * w + q + 1) * cin];
                    let kk = &k[(ky * 3 + kx) * cin * cout..(ky * 3 + kx + 1) * cin * cout];
                    for (ci, &xv) in px.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        for (ov, kv) in o.iter_mut().zip(&kk[ci * cout..(ci + 1) * cout]) {
                            *ov += xv * kv;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates kernel and bias gradients into `dk`/`db` and returns the
/// gradient with respect to the input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    x: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    k: &[f64],
    cout: usize,
    g: &[f64],
    dk: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; h * w * cin];
    for i in 0..h {
        for j in 0..w {
            let go = &g[(i * w + j) * cout..(i * w + j + 1) * cout];
            for (d, v) in db.iter_mut().zip(go) {
                *d += v;
            }
            for ky in 0..3 {
                let Some(p) = (i + ky).checked_sub(1).filter(|&p| p < h) else { continue };
                for kx in 0..3 {
                    let Some(q) = (j + kx).checked_sub(1).filter(|&q| q < w) else { continue };
                    let base = (p * w + q) * cin;
                    let koff = (ky * 3 + kx) * cin * cout;
                    for ci in 0..cin {
                        let xv = x[base + ci];
                        let krow = &k[koff + ci * cout..koff + (ci + 1) * cout];
                        let dkrow = &mut dk[koff + ci * cout..koff + (ci + 1) * cout];
                        let mut acc = 0.0;
                        for ((dkv, kv), gv) in dkrow.iter_mut().zip(krow).zip(go) {
                            *dkv += xv * gv;
                            acc += kv * gv;
                        }
                        dx[base + ci] += acc;
                    }
                }
            }
        }
    }
    dx
}

pub fn relu(t: &Tensor) -> Tensor {
    Tensor { shape: t.shape.clone(), data: t.data.iter().map(|&v| v.max(0.0)).collect() }
}

/// 2x2 stride-2 max pooling. Odd edges are padded with negative infinity,
/// so the output is `ceil(h/2) x ceil(w/2)`. Returns, per output value, the
/// flat input index it came from; ties keep the first in row-major order.
pub fn maxpool(t: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = t.hwc()?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = vec![f64::NEG_INFINITY; oh * ow * c];
    let mut arg = vec![0usize; oh * ow * c];
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..c {
                let o = (i * ow + j) * c + ch;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (p, q) = (2 * i + dy, 2 * j + dx);
                        if p >= h || q >= w {
                            continue;
                        }
                        let idx = (p * w + q) * c + ch;
                        if t.data[idx] > out[o] {
                            out[o] = t.data[idx];
                            arg[o] = idx;
                        }
                    }
                }
            }
        }
    }
    Ok((Tensor { shape: vec![oh, ow, c], data: out }, arg))
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Probabilities below this are clamped before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn cross_entropy(probs: &[f64], true_class: usize) -> f64 {
    -probs[true_class].max(PROB_FLOOR).ln()
}
