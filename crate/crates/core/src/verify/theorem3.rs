use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EpochPlan};
use crate::error::{Error, Result};
use crate::model::{Model, ParamVector};
use crate::optim::{ausam_step, OptimizerConfig, OptimizerState, Schedule};
use crate::sampler::{Sampler, SamplerConfig, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Setup {
    /// Constant learning rate; must satisfy `η ≤ 1/τ`.
    pub eta: f64,
    /// Must satisfy `ρ ≤ 1/(4τ)`.
    pub rho: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub alpha: f64,
    pub burn_in: usize,
    pub seed: u64,
    pub w0: Option<ParamVector>,
}

/// The running mean `(1/T)·Σ_{t<T} ‖∇L_D(w_t)‖²` as a function of `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub model: String,
    pub seed: u64,
    pub tau: f64,
    pub grad_sq: Vec<f64>,
    pub running_mean: Vec<f64>,
    /// First `T > burn_in` where the running mean went up, if any.
    pub first_increase: Option<usize>,
    pub holds: bool,
}

/// Decrease of the averaged full-gradient norm in the convergent regime.
/// The inequality itself involves the unobservable gradient variance, so
/// only its monotone consequence is checked.
pub fn theorem3_proxy(
    model: &Model,
    dataset: &Dataset,
    setup: &Theorem3Setup,
) -> Result<Theorem3Report> {
    let tau = model
        .smoothness_constant()
        .ok_or_else(|| Error::SmoothnessUnavailable(model.describe()))?;
    if !(setup.eta > 0.0 && setup.eta <= 1.0 / tau) {
        return Err(Error::Precondition(format!(
            "eta = {} outside (0, 1/tau = {}]",
            setup.eta,
            1.0 / tau
        )));
    }
    if !(setup.rho > 0.0 && setup.rho <= 0.25 / tau) {
        return Err(Error::Precondition(format!(
            "rho = {} outside (0, 1/(4 tau) = {}]",
            setup.rho,
            0.25 / tau
        )));
    }
    let cfg = OptimizerConfig {
        base_lr: setup.eta,
        momentum: 0.0,
        weight_decay: 0.0,
        rho: setup.rho,
        total_epochs: 1,
        schedule: Schedule::Constant,
    };
    let mut sampler = Sampler::new(
        SamplerConfig {
            alpha: setup.alpha,
            seed: setup.seed,
            ..SamplerConfig::default()
        },
        Strategy::Adlp,
    )?;
    let mut w = setup
        .w0
        .clone()
        .unwrap_or_else(|| model.init_params(setup.seed));
    let mut state = OptimizerState::new(w.len());
    let full = dataset.as_batch()?;

    let mut grad_sq = Vec::with_capacity(setup.steps + 1);
    grad_sq.push(model.batch_gradient(&w, &full)?.norm().powi(2));
    let mut epoch = 0;
    'outer: loop {
        state.epoch = epoch;
        let plan = EpochPlan::new(dataset.len(), setup.batch_size, setup.seed, epoch)?;
        for batch in plan.batches(dataset)? {
            if grad_sq.len() > setup.steps {
                break 'outer;
            }
            ausam_step(model, &mut w, &batch, &cfg, &mut sampler, &mut state)?;
            grad_sq.push(model.batch_gradient(&w, &full)?.norm().powi(2));
        }
        epoch += 1;
    }

    let mut running_mean = Vec::with_capacity(grad_sq.len());
    let mut sum = 0.0;
    for (i, g) in grad_sq.iter().enumerate() {
        sum += g;
        running_mean.push(sum / (i + 1) as f64);
    }
    // running_mean[i] is the mean over the first T = i + 1 iterates.
    let first_increase = (setup.burn_in.max(1)..running_mean.len())
        .find(|&i| running_mean[i] > running_mean[i - 1] * (1.0 + 1e-12))
        .map(|i| i + 1);
    Ok(Theorem3Report {
        model: model.describe(),
        seed: setup.seed,
        tau,
        grad_sq,
        running_mean,
        holds: first_increase.is_none(),
        first_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_quadratic_problem, QuadraticSpec};

    fn setup(tau: f64, seed: u64) -> Theorem3Setup {
        Theorem3Setup {
            eta: 0.5 / tau,
            rho: 0.25 / tau,
            steps: 40,
            batch_size: 16,
            alpha: 0.5,
            burn_in: 10,
            seed,
            w0: None,
        }
    }

    #[test]
    fn hypothesis_enforced() {
        let (model, ds) = make_quadratic_problem(&QuadraticSpec::new(4, 5.0, 1)).unwrap();
        let tau = model.smoothness_constant().unwrap();
        let mut s = setup(tau, 1);
        s.eta = 1.5 / tau;
        assert!(theorem3_proxy(&model, &ds, &s).is_err());
        let mut s = setup(tau, 1);
        s.rho = 0.3 / tau;
        assert!(theorem3_proxy(&model, &ds, &s).is_err());
    }

    #[test]
    fn running_mean_decreases_from_a_distant_start() {
        let (model, ds) = make_quadratic_problem(&QuadraticSpec::new(4, 5.0, 3)).unwrap();
        let tau = model.smoothness_constant().unwrap();
        let mut s = setup(tau, 3);
        s.w0 = Some(ParamVector(vec![10.0; 4]));
        let r = theorem3_proxy(&model, &ds, &s).unwrap();
        assert_eq!(r.grad_sq.len(), 41);
        assert!(r.holds, "{:?}", r.first_increase);
        assert!(r.running_mean[40] < r.running_mean[0]);
    }
}
