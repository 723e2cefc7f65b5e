//! Dense ReLU network with a softmax cross-entropy head.
//!
//! Parameters are stored layer by layer: the `out × in` weight matrix
//! (row-major) followed by the `out` biases. Forward and backward passes run
//! on the whole batch at once, one `K × width` activation matrix per layer.

use super::heads::softmax_cross_entropy;
use super::{check_finite, class_of};
use crate::error::Result;
use crate::model::{Gradient, MiniBatch, ParamVector};

pub(crate) fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

/// Offset of each layer's weight block within the flat parameter vector.
fn layer_offsets(widths: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(widths.len() - 1);
    let mut at = 0;
    for p in widths.windows(2) {
        offsets.push(at);
        at += p[0] * p[1] + p[1];
    }
    offsets
}

/// Which hidden units are active (pre-activation > 0) for one input. Two
/// weight vectors with the same pattern lie in the same smooth piece.
pub(crate) fn relu_pattern(widths: &[usize], w: &ParamVector, features: &[f64]) -> Vec<bool> {
    let offsets = layer_offsets(widths);
    let layers = widths.len() - 1;
    let mut pattern = Vec::new();
    let mut x = features.to_vec();
    for l in 0..layers - 1 {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let weights = &w[offsets[l]..offsets[l] + n_in * n_out];
        let bias = &w[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
        x = (0..n_out)
            .map(|o| {
                let z: f64 = bias[o]
                    + weights[o * n_in..(o + 1) * n_in]
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                pattern.push(z > 0.0);
                z.max(0.0)
            })
            .collect();
    }
    pattern
}

pub(crate) fn evaluate(
    widths: &[usize],
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    want_grad: bool,
) -> Result<(Vec<f64>, Option<Gradient>)> {
    let k = batch.len();
    let layers = widths.len() - 1;
    let classes = widths[layers];
    let offsets = layer_offsets(widths);

    let labels = batch
        .samples()
        .iter()
        .map(|s| class_of(s, classes))
        .collect::<Result<Vec<_>>>()?;

    // acts[0] is the input; acts[l] the post-activation output of layer l
    // (raw logits for the last layer).
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
    let mut input = Vec::with_capacity(k * widths[0]);
    for s in batch.samples() {
        input.extend_from_slice(&s.features);
    }
    acts.push(input);

    for l in 0..layers {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let weights = &w[offsets[l]..offsets[l] + n_in * n_out];
        let bias = &w[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
        let prev = &acts[l];
        let mut out = vec![0.0; k * n_out];
        for r in 0..k {
            let x = &prev[r * n_in..(r + 1) * n_in];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let mut z = bias[o];
                for (a, b) in row.iter().zip(x) {
                    z += a * b;
                }
                out[r * n_out + o] = if l + 1 < layers { z.max(0.0) } else { z };
            }
        }
        check_finite(&out, &format!("dense layer {}", l + 1))?;
        acts.push(out);
    }

    let logits = &acts[layers];
    let mut losses = Vec::with_capacity(k);
    let mut delta = vec![0.0; k * classes];
    for r in 0..k {
        let loss = softmax_cross_entropy(
            &logits[r * classes..(r + 1) * classes],
            labels[r],
            &mut delta[r * classes..(r + 1) * classes],
        );
        losses.push(loss);
    }
    check_finite(&losses, "softmax cross-entropy")?;
    if !want_grad {
        return Ok((losses, None));
    }

    let inv_k = 1.0 / k as f64;
    for d in delta.iter_mut() {
        *d *= inv_k;
    }
    let mut grad = Gradient::zeros(w.len());
    for l in (0..layers).rev() {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let w_off = offsets[l];
        let b_off = w_off + n_in * n_out;
        let prev = &acts[l];
        for r in 0..k {
            let x = &prev[r * n_in..(r + 1) * n_in];
            let d = &delta[r * n_out..(r + 1) * n_out];
            for (o, &dz) in d.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                let g_row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, xi) in g_row.iter_mut().zip(x) {
                    *g += dz * xi;
                }
                grad[b_off + o] += dz;
            }
        }
        if l == 0 {
            break;
        }
        // Propagate through the weights, then through the ReLU of layer l.
        let weights = &w[w_off..w_off + n_in * n_out];
        let mut next = vec![0.0; k * n_in];
        for r in 0..k {
            let d = &delta[r * n_out..(r + 1) * n_out];
            let out = &mut next[r * n_in..(r + 1) * n_in];
            for (o, &dz) in d.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                for (acc, wv) in out.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *acc += dz * wv;
                }
            }
            for (acc, &a) in out.iter_mut().zip(&prev[r * n_in..(r + 1) * n_in]) {
                if a <= 0.0 {
                    *acc = 0.0;
                }
            }
        }
        delta = next;
    }
    check_finite(&grad, "backward pass")?;
    Ok((losses, Some(grad)))
}
