//! Loss heads shared by the classifiers.

/// Numerically stable softmax cross-entropy. Writes `softmax - onehot(label)`
/// into `dlogits` and returns the loss.
pub(crate) fn softmax_cross_entropy(logits: &[f64], label: usize, dlogits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (d, &z) in dlogits.iter_mut().zip(logits) {
        *d = (z - max).exp();
        total += *d;
    }
    for d in dlogits.iter_mut() {
        *d /= total;
    }
    dlogits[label] -= 1.0;
    max + total.ln() - logits[label]
}

/// Binary cross-entropy on a single logit, label in {0, 1}. Returns
/// `(loss, dloss/dz)`.
pub(crate) fn sigmoid_cross_entropy(z: f64, label: usize) -> (f64, f64) {
    let y = label as f64;
    let loss = z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
    (loss, sigmoid(z) - y)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
