use super::heads::{sigmoid_cross_entropy, softmax_cross_entropy};
use super::{check_finite, class_of};
use crate::error::Result;
use crate::model::{Gradient, MiniBatch, ParamVector};

/// Linear classifier without intercept. Two classes use a single sigmoid
/// logit (`inputs` weights); more classes use softmax over `classes * inputs`
/// weights stored class-major.
pub(crate) fn param_count(inputs: usize, classes: usize) -> usize {
    if classes == 2 {
        inputs
    } else {
        inputs * classes
    }
}

pub(crate) fn evaluate(
    inputs: usize,
    classes: usize,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    want_grad: bool,
) -> Result<(Vec<f64>, Option<Gradient>)> {
    let k = batch.len() as f64;
    let mut losses = Vec::with_capacity(batch.len());
    let mut grad = want_grad.then(|| Gradient::zeros(w.len()));
    let mut dlogits = vec![0.0; classes];
    for s in batch.samples() {
        let label = class_of(s, classes)?;
        let x = &s.features;
        if classes == 2 {
            let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            let (loss, dz) = sigmoid_cross_entropy(z, label);
            losses.push(loss);
            if let Some(g) = grad.as_mut() {
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += dz * xi / k;
                }
            }
        } else {
            let logits: Vec<f64> = (0..classes)
                .map(|c| {
                    w[c * inputs..(c + 1) * inputs]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            check_finite(&logits, "logistic logits")?;
            let loss = softmax_cross_entropy(&logits, label, &mut dlogits);
            losses.push(loss);
            if let Some(g) = grad.as_mut() {
                for (c, &dz) in dlogits.iter().enumerate() {
                    for (gi, xi) in g[c * inputs..(c + 1) * inputs].iter_mut().zip(x) {
                        *gi += dz * xi / k;
                    }
                }
            }
        }
    }
    check_finite(&losses, "sigmoid/softmax cross-entropy")?;
    if let Some(g) = grad.as_ref() {
        check_finite(g, "logistic gradient")?;
    }
    Ok((losses, grad))
}
