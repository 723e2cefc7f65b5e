//! SGD, SAM and AUSAM update steps.
//!
//! Every step ends in the same base update: `v ← μv + g`,
//! `w ← w − η(v + λw)` with momentum `μ`, decoupled weight decay `λ` and the
//! scheduled learning rate `η`. Steps differ only in which gradient `g` they
//! feed it and how many per-sample evaluations they spend.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gradient, MiniBatch, Model, ParamVector};
use crate::sampler::Sampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    /// `η₀ · ½(1 + cos(π · epoch / total_epochs))`
    Cosine,
    /// `η₀ / t²` with `t = epoch + 1`
    InverseSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Perturbation radius.
    pub rho: f64,
    pub total_epochs: usize,
    pub schedule: Schedule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            base_lr: 0.05,
            momentum: 0.9,
            weight_decay: 0.001,
            rho: 0.1,
            total_epochs: 200,
            schedule: Schedule::Cosine,
        }
    }
}

impl OptimizerConfig {
    /// `needs_rho` is set for SAM-family methods.
    pub fn validate(&self, needs_rho: bool) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::config("optimizer.base_lr", "must be finite and > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("optimizer.momentum", "must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config("optimizer.weight_decay", "must be finite and >= 0"));
        }
        if needs_rho && !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config("optimizer.rho", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.base_lr,
            Schedule::Cosine => {
                let frac = epoch as f64 / self.total_epochs.max(1) as f64;
                self.base_lr * 0.5 * (1.0 + (PI * frac).cos())
            }
            Schedule::InverseSquare => {
                let t = (epoch + 1) as f64;
                self.base_lr / (t * t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub momentum: Gradient,
    pub step: u64,
    pub epoch: usize,
}

impl OptimizerState {
    pub fn new(param_count: usize) -> Self {
        OptimizerState {
            momentum: Gradient::zeros(param_count),
            step: 0,
            epoch: 0,
        }
    }
}

/// What one step did.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub lr: f64,
    /// Mean loss over the samples the step evaluated, at the unperturbed weights.
    pub train_loss: f64,
    pub grad_norm: f64,
    /// Gradient norm at the perturbed weights; absent for SGD and fallbacks.
    pub perturbed_grad_norm: Option<f64>,
    pub batch_size: usize,
    pub forward_samples: u64,
    pub backward_samples: u64,
    pub selected_ids: Vec<usize>,
    pub zero_gradient: bool,
}

/// `ρ g / ‖g‖`. Fails with [`Error::ZeroGradient`] when `‖g‖ ≤ ε_mach·√d`.
pub fn sam_perturbation(g: &Gradient, rho: f64) -> Result<Gradient> {
    let norm = g.norm();
    let floor = f64::EPSILON * (g.len() as f64).sqrt();
    if norm.is_nan() || norm <= floor {
        return Err(Error::ZeroGradient);
    }
    let scale = rho / norm;
    Ok(Gradient(g.iter().map(|x| x * scale).collect()))
}

fn apply_update(
    w: &mut ParamVector,
    g: &Gradient,
    cfg: &OptimizerConfig,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    for ((wi, vi), gi) in w.iter_mut().zip(state.momentum.iter_mut()).zip(g.iter()) {
        *vi = cfg.momentum * *vi + gi;
        *wi -= lr * (*vi + cfg.weight_decay * *wi);
    }
    state.step += 1;
    if w.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            layer: "parameter update".into(),
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One plain step on the batch gradient: K forward + K backward evaluations.
pub fn sgd_step(
    model: &Model,
    w: &mut ParamVector,
    batch: &MiniBatch<'_>,
    cfg: &OptimizerConfig,
    state: &mut OptimizerState,
) -> Result<StepRecord> {
    let lr = cfg.lr_at(state.epoch);
    let (losses, g) = model.losses_and_gradient(w, batch)?;
    let k = batch.len() as u64;
    let record = StepRecord {
        step: state.step,
        epoch: state.epoch,
        lr,
        train_loss: mean(&losses),
        grad_norm: g.norm(),
        perturbed_grad_norm: None,
        batch_size: batch.len(),
        forward_samples: k,
        backward_samples: k,
        selected_ids: Vec::new(),
        zero_gradient: false,
    };
    apply_update(w, &g, cfg, state, lr)?;
    Ok(record)
}

/// Gradient at `w + ρ g/‖g‖` over the same batch. A vanishing first
/// gradient falls back to an SGD update and sets `zero_gradient`.
pub fn sam_step(
    model: &Model,
    w: &mut ParamVector,
    batch: &MiniBatch<'_>,
    cfg: &OptimizerConfig,
    state: &mut OptimizerState,
) -> Result<StepRecord> {
    let outcome = perturbed_pass(model, w, batch, cfg.rho)?;
    let lr = cfg.lr_at(state.epoch);
    let k = batch.len() as u64;
    let passes = if outcome.perturbed.is_some() { 2 } else { 1 };
    let record = StepRecord {
        step: state.step,
        epoch: state.epoch,
        lr,
        train_loss: mean(&outcome.losses),
        grad_norm: outcome.grad.norm(),
        perturbed_grad_norm: outcome.perturbed.as_ref().map(|p| p.grad.norm()),
        batch_size: batch.len(),
        forward_samples: passes * k,
        backward_samples: passes * k,
        selected_ids: Vec::new(),
        zero_gradient: outcome.perturbed.is_none(),
    };
    let g = outcome.update_gradient();
    apply_update(w, g, cfg, state, lr)?;
    Ok(record)
}

/// Algorithm-1 step: score the batch, keep `⌈αK⌉` samples, run both SAM
/// passes on that subset only, update, then record each kept sample's
/// `|L_x(w + ε) − L_x(w)|` in the sampler's table.
pub fn ausam_step(
    model: &Model,
    w: &mut ParamVector,
    batch: &MiniBatch<'_>,
    cfg: &OptimizerConfig,
    sampler: &mut Sampler,
    state: &mut OptimizerState,
) -> Result<StepRecord> {
    let scores = sampler.probabilities(batch, state.epoch);
    let positions = sampler.select(&scores)?;
    let subset = batch.select(&positions)?;

    let outcome = perturbed_pass(model, w, &subset, cfg.rho)?;
    let lr = cfg.lr_at(state.epoch);
    let n = subset.len() as u64;
    let passes = if outcome.perturbed.is_some() { 2 } else { 1 };
    let ids = subset.ids();
    let record = StepRecord {
        step: state.step,
        epoch: state.epoch,
        lr,
        train_loss: mean(&outcome.losses),
        grad_norm: outcome.grad.norm(),
        perturbed_grad_norm: outcome.perturbed.as_ref().map(|p| p.grad.norm()),
        batch_size: batch.len(),
        forward_samples: passes * n,
        backward_samples: passes * n,
        selected_ids: ids.clone(),
        zero_gradient: outcome.perturbed.is_none(),
    };
    apply_update(w, outcome.update_gradient(), cfg, state, lr)?;

    match &outcome.perturbed {
        Some(p) => {
            for ((id, before), after) in ids.iter().zip(&outcome.losses).zip(&p.losses) {
                sampler.table.push(*id, (after - before).abs())?;
            }
        }
        None => {
            for id in &ids {
                sampler.table.push(*id, 0.0)?;
            }
        }
    }
    Ok(record)
}

struct PerturbedPass {
    losses: Vec<f64>,
    grad: Gradient,
    perturbed: Option<Evaluated>,
}

struct Evaluated {
    losses: Vec<f64>,
    grad: Gradient,
}

impl PerturbedPass {
    fn update_gradient(&self) -> &Gradient {
        self.perturbed.as_ref().map(|p| &p.grad).unwrap_or(&self.grad)
    }
}

fn perturbed_pass(
    model: &Model,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    rho: f64,
) -> Result<PerturbedPass> {
    let (losses, grad) = model.losses_and_gradient(w, batch)?;
    let perturbed = match sam_perturbation(&grad, rho) {
        Ok(eps) => {
            let (losses, grad) = model.losses_and_gradient(&w.offset_by(&eps), batch)?;
            Some(Evaluated { losses, grad })
        }
        Err(Error::ZeroGradient) => None,
        Err(e) => return Err(e),
    };
    Ok(PerturbedPass {
        losses,
        grad,
        perturbed,
    })
}
