use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BoundReport, InstanceDescriptor};
use crate::data::{Dataset, EpochPlan};
use crate::error::{Error, Result};
use crate::model::{Model, ParamVector};
use crate::optim::{ausam_step, OptimizerConfig, OptimizerState, Schedule};
use crate::sampler::{Sampler, SamplerConfig, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Setup {
    pub eta0: f64,
    pub batch_size: usize,
    /// `T`: the check looks at `T` epoch-boundary iterates `w_1 … w_T`,
    /// i.e. `T − 1` epochs of training.
    pub epochs: usize,
    pub rho: f64,
    pub alpha: f64,
    /// Dataset index of the monitored sample `x`.
    pub sample_index: usize,
    pub seed: u64,
    /// Starting point; `None` draws one from the model's initializer.
    pub w0: Option<ParamVector>,
}

/// Drift of one sample's gradient norm under the `η₀/t²` schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    #[serde(flatten)]
    pub bound: BoundReport,
    pub tau: f64,
    /// Steps per epoch.
    pub steps_per_epoch: usize,
    /// Largest gradient norm used in any update (`G`).
    pub g_max: f64,
    /// `‖∇L_x(w_t)‖` at every epoch boundary, `t = 1 … T`.
    pub sample_grad_norms: Vec<f64>,
}

/// Runs AUSAM without momentum or weight decay and checks
/// `|‖∇L_x(w_T)‖ − mean_{t<T} ‖∇L_x(w_t)‖| ≤ τη₀π²NG/6`.
pub fn theorem2_check(
    model: &Model,
    dataset: &Dataset,
    setup: &Theorem2Setup,
) -> Result<Theorem2Report> {
    let tau = model
        .smoothness_constant()
        .ok_or_else(|| Error::SmoothnessUnavailable(model.describe()))?;
    if setup.epochs < 2 {
        return Err(Error::Precondition("theorem 2 needs T >= 2".into()));
    }
    if !(setup.eta0 >= 0.0 && setup.eta0.is_finite()) {
        return Err(Error::config("eta0", "must be finite and >= 0"));
    }
    let sample = dataset.samples().get(setup.sample_index).ok_or_else(|| {
        Error::Precondition(format!("sample index {} out of range", setup.sample_index))
    })?;

    let mut w = match &setup.w0 {
        Some(w0) => w0.clone(),
        None => model.init_params(setup.seed),
    };
    let mut sampler = Sampler::new(
        SamplerConfig {
            alpha: setup.alpha,
            seed: setup.seed,
            ..SamplerConfig::default()
        },
        Strategy::Adlp,
    )?;
    if !(setup.rho > 0.0 && setup.rho.is_finite()) {
        return Err(Error::config("rho", "must be finite and > 0"));
    }
    let cfg = OptimizerConfig {
        base_lr: setup.eta0,
        momentum: 0.0,
        weight_decay: 0.0,
        rho: setup.rho,
        total_epochs: setup.epochs,
        schedule: Schedule::InverseSquare,
    };

    let mut state = OptimizerState::new(w.len());
    let mut norms = vec![model.per_sample_gradient(&w, sample)?.norm()];
    let mut g_max: f64 = 0.0;
    let steps_per_epoch =
        EpochPlan::new(dataset.len(), setup.batch_size, setup.seed, 0)?.batch_count();
    for epoch in 0..setup.epochs - 1 {
        state.epoch = epoch;
        let plan = EpochPlan::new(dataset.len(), setup.batch_size, setup.seed, epoch)?;
        for batch in plan.batches(dataset)? {
            let rec = ausam_step(model, &mut w, &batch, &cfg, &mut sampler, &mut state)?;
            g_max = g_max.max(rec.perturbed_grad_norm.unwrap_or(rec.grad_norm));
        }
        norms.push(model.per_sample_gradient(&w, sample)?.norm());
    }

    let t = norms.len();
    let history = norms[..t - 1].iter().sum::<f64>() / (t - 1) as f64;
    let lhs = (norms[t - 1] - history).abs();
    let rhs = tau * setup.eta0 * PI * PI * steps_per_epoch as f64 * g_max / 6.0;
    let report = BoundReport::new(
        lhs,
        rhs,
        InstanceDescriptor {
            model: model.describe(),
            k: setup.batch_size,
            n: steps_per_epoch,
            rho: setup.rho,
            seed: setup.seed,
        },
    );
    Ok(Theorem2Report {
        bound: report,
        tau,
        steps_per_epoch,
        g_max,
        sample_grad_norms: norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_quadratic_problem, QuadraticSpec, Task, Provenance};
    use crate::model::{Quadratic, Sample, Target};

    fn setup(eta0: f64, epochs: usize) -> Theorem2Setup {
        Theorem2Setup {
            eta0,
            batch_size: 8,
            epochs,
            rho: 0.05,
            alpha: 0.5,
            sample_index: 3,
            seed: 11,
            w0: None,
        }
    }

    #[test]
    fn neural_models_rejected() {
        let model = Model::mlp(vec![2, 4, 2]).unwrap();
        let samples = (0..4)
            .map(|i| Sample::new(i, vec![0.0, 1.0], Target::Class(i % 2)))
            .collect();
        let ds = Dataset::new(samples, Task::Classification { classes: 2 }, Provenance::Derived("test".into()))
            .unwrap();
        assert!(matches!(
            theorem2_check(&model, &ds, &setup(0.1, 3)),
            Err(Error::SmoothnessUnavailable(_))
        ));
    }

    #[test]
    fn frozen_weights_give_zero_lhs() {
        let (model, ds) = make_quadratic_problem(&QuadraticSpec::new(5, 4.0, 2)).unwrap();
        let r = theorem2_check(&model, &ds, &setup(0.0, 5)).unwrap();
        assert_eq!(r.bound.lhs, 0.0);
        assert!(r.bound.holds);
    }

    #[test]
    fn start_at_shared_minimizer_is_stationary() {
        // All offsets zero: every subset gradient vanishes at the minimizer.
        let model = Model::quadratic(Quadratic::diagonal(&[1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0]));
        let samples = (0..16)
            .map(|i| Sample::new(i, vec![0.0; 3], Target::Value(0.0)))
            .collect();
        let ds = Dataset::new(samples, Task::Regression, Provenance::Derived("test".into())).unwrap();
        let mut s = setup(0.1, 2);
        s.w0 = Some(ParamVector(vec![1.0, 0.5, 1.0 / 3.0]));
        let r = theorem2_check(&model, &ds, &s).unwrap();
        assert!(r.bound.lhs < 1e-15);
        assert!(r.bound.holds);
    }

    #[test]
    fn desk_instance_holds() {
        let mut spec = QuadraticSpec::new(5, 10.0, 7);
        spec.samples = 40;
        let (model, ds) = make_quadratic_problem(&spec).unwrap();
        let r = theorem2_check(&model, &ds, &setup(0.1, 10)).unwrap();
        assert_eq!(r.steps_per_epoch, 5);
        assert_eq!(r.sample_grad_norms.len(), 10);
        assert!(r.bound.holds, "{r:?}");
        assert!(r.g_max > 0.0);
    }
}
