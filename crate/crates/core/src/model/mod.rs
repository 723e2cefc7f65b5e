//! Differentiable models: per-sample losses, batch gradients and the
//! per-sample gradient oracle everything else builds on.

mod checkpoint;
mod heads;
mod logistic;
mod mlp;
mod quadratic;
mod types;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use quadratic::Quadratic;
pub use types::{Gradient, MiniBatch, ParamVector, Sample, Target};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    /// Linear classifier; see [`Model::logistic`].
    Logistic { inputs: usize, classes: usize },
    /// `widths = [inputs, hidden.., classes]`, ReLU between dense layers.
    Mlp { widths: Vec<usize> },
    Quadratic(Quadratic),
}

impl Model {
    /// Binary problems use one sigmoid logit per input weight (no intercept;
    /// append a constant feature if one is needed).
    pub fn logistic(inputs: usize, classes: usize) -> Result<Self> {
        if inputs == 0 || classes < 2 {
            return Err(Error::config(
                "model",
                "logistic regression needs inputs >= 1 and classes >= 2",
            ));
        }
        Ok(Model::Logistic { inputs, classes })
    }

    pub fn mlp(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::config("model", "mlp widths must be >= 2 positive entries"));
        }
        if *widths.last().unwrap() < 2 {
            return Err(Error::config("model", "mlp needs at least 2 output classes"));
        }
        Ok(Model::Mlp { widths })
    }

    pub fn quadratic(q: Quadratic) -> Self {
        Model::Quadratic(q)
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Logistic { inputs, classes } => logistic::param_count(*inputs, *classes),
            Model::Mlp { widths } => mlp::param_count(widths),
            Model::Quadratic(q) => q.dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Logistic { inputs, .. } => *inputs,
            Model::Mlp { widths } => widths[0],
            Model::Quadratic(q) => q.dim,
        }
    }

    pub fn classes(&self) -> Option<usize> {
        match self {
            Model::Logistic { classes, .. } => Some(*classes),
            Model::Mlp { widths } => widths.last().copied(),
            Model::Quadratic(_) => None,
        }
    }

    /// Short human-readable descriptor, e.g. `mlp(2-16-16-2)`.
    pub fn describe(&self) -> String {
        match self {
            Model::Logistic { inputs, classes } => format!("logistic({inputs},{classes})"),
            Model::Mlp { widths } => {
                let w: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
                format!("mlp({})", w.join("-"))
            }
            Model::Quadratic(q) => format!("quadratic({})", q.dim),
        }
    }

    /// Seeded initial parameters: He-normal weights and zero biases for the
    /// MLP, zeros for logistic regression, standard normal for quadratics.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Model::Logistic { .. } => ParamVector::zeros(self.param_count()),
            Model::Quadratic(q) => {
                let n = Normal::new(0.0, 1.0).unwrap();
                ParamVector((0..q.dim).map(|_| n.sample(&mut rng)).collect())
            }
            Model::Mlp { widths } => {
                let mut w = Vec::with_capacity(self.param_count());
                for p in widths.windows(2) {
                    let n = Normal::new(0.0, (2.0 / p[0] as f64).sqrt()).unwrap();
                    w.extend((0..p[0] * p[1]).map(|_| n.sample(&mut rng)));
                    w.extend(std::iter::repeat_n(0.0, p[1]));
                }
                ParamVector(w)
            }
        }
    }

    fn check_params(&self, w: &ParamVector) -> Result<()> {
        if w.len() != self.param_count() {
            return Err(Error::ParamCount {
                expected: self.param_count(),
                got: w.len(),
            });
        }
        check_finite(w, "parameters")
    }

    fn evaluate(
        &self,
        w: &ParamVector,
        batch: &MiniBatch<'_>,
        want_grad: bool,
    ) -> Result<(Vec<f64>, Option<Gradient>)> {
        self.check_params(w)?;
        let expected = self.input_dim();
        for s in batch.samples() {
            if s.features.len() != expected {
                return Err(Error::DimensionMismatch {
                    id: s.id,
                    expected,
                    got: s.features.len(),
                });
            }
        }
        match self {
            Model::Logistic { inputs, classes } => {
                logistic::evaluate(*inputs, *classes, w, batch, want_grad)
            }
            Model::Mlp { widths } => mlp::evaluate(widths, w, batch, want_grad),
            Model::Quadratic(q) => q.evaluate(w, batch, want_grad),
        }
    }

    /// `L_{x_i}(w)` for every sample, in batch order.
    pub fn per_sample_losses(&self, w: &ParamVector, batch: &MiniBatch<'_>) -> Result<Vec<f64>> {
        self.evaluate(w, batch, false).map(|(l, _)| l)
    }

    /// Gradient of the batch-mean loss.
    pub fn batch_gradient(&self, w: &ParamVector, batch: &MiniBatch<'_>) -> Result<Gradient> {
        self.losses_and_gradient(w, batch).map(|(_, g)| g)
    }

    /// One forward and one backward pass over the batch: per-sample losses
    /// and the batch-mean gradient.
    pub fn losses_and_gradient(
        &self,
        w: &ParamVector,
        batch: &MiniBatch<'_>,
    ) -> Result<(Vec<f64>, Gradient)> {
        let (losses, grad) = self.evaluate(w, batch, true)?;
        Ok((losses, grad.expect("gradient requested")))
    }

    pub fn batch_loss(&self, w: &ParamVector, batch: &MiniBatch<'_>) -> Result<f64> {
        let losses = self.per_sample_losses(w, batch)?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    /// Exact gradient of one sample's loss (a backward pass on a singleton batch).
    pub fn per_sample_gradient(&self, w: &ParamVector, sample: &Sample) -> Result<Gradient> {
        self.batch_gradient(w, &MiniBatch::new(vec![sample])?)
    }

    /// Per-sample gradients by looping single-sample backward passes.
    pub fn per_sample_gradients(
        &self,
        w: &ParamVector,
        batch: &MiniBatch<'_>,
    ) -> Result<Vec<Gradient>> {
        batch
            .samples()
            .iter()
            .map(|s| self.per_sample_gradient(w, s))
            .collect()
    }

    /// Hidden-unit activation pattern for MLPs; `None` for smooth models.
    pub(crate) fn relu_pattern(&self, w: &ParamVector, sample: &Sample) -> Option<Vec<bool>> {
        match self {
            Model::Mlp { widths } => Some(mlp::relu_pattern(widths, w, &sample.features)),
            _ => None,
        }
    }

    /// Lipschitz constant of the gradient when it is known in closed form
    /// (quadratics only).
    pub fn smoothness_constant(&self) -> Option<f64> {
        match self {
            Model::Quadratic(q) => Some(q.smoothness()),
            _ => None,
        }
    }

    /// Predicted class, or `None` for non-classifiers.
    pub fn predict(&self, w: &ParamVector, sample: &Sample) -> Result<Option<usize>> {
        let classes = match self.classes() {
            Some(c) => c,
            None => return Ok(None),
        };
        let logits = match self {
            Model::Logistic { .. } if classes == 2 => {
                let z: f64 = w.iter().zip(&sample.features).map(|(a, b)| a * b).sum();
                vec![0.0, z]
            }
            Model::Logistic { inputs, .. } => (0..classes)
                .map(|c| {
                    w[c * inputs..(c + 1) * inputs]
                        .iter()
                        .zip(&sample.features)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
            Model::Mlp { widths } => self.mlp_logits(widths, w, sample)?,
            Model::Quadratic(_) => unreachable!(),
        };
        let mut best = 0;
        for (i, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = i;
            }
        }
        Ok(Some(best))
    }

    fn mlp_logits(&self, widths: &[usize], w: &ParamVector, sample: &Sample) -> Result<Vec<f64>> {
        let mut x = sample.features.clone();
        let mut at = 0;
        let layers = widths.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let weights = &w[at..at + n_in * n_out];
            let bias = &w[at + n_in * n_out..at + n_in * n_out + n_out];
            x = (0..n_out)
                .map(|o| {
                    let z = bias[o]
                        + weights[o * n_in..(o + 1) * n_in]
                            .iter()
                            .zip(&x)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    if l + 1 < layers {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            at += n_in * n_out + n_out;
        }
        check_finite(&x, "mlp logits")?;
        Ok(x)
    }
}

pub(crate) fn check_finite(values: &[f64], layer: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            layer: layer.to_string(),
        })
    }
}

pub(crate) fn class_of(sample: &Sample, classes: usize) -> Result<usize> {
    match sample.target {
        Target::Class(c) if c < classes => Ok(c),
        other => Err(Error::BadLabel {
            id: sample.id,
            label: format!("{other:?}"),
        }),
    }
}
