use serde::{Deserialize, Serialize};

use super::{average, BoundReport, InstanceDescriptor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Gradient, Model, ParamVector};
use crate::optim::sam_perturbation;
use crate::vecops;

/// Largest dataset the exact enumeration accepts.
pub const MAX_ENUMERATED: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Report {
    #[serde(flatten)]
    pub bound: BoundReport,
    pub dataset_grad_norm: f64,
    pub mean_selection_rate: f64,
}

/// Selection bias of the first-order perturbation gap:
/// `|(1/|D|)·Σ (1 − p_x)·ε_D·∇L_x| ≤ (ρ/|D|)·Σ (1 − p_x)·‖∇L_x‖`,
/// with `ε_D` the SAM perturbation of the full-dataset gradient and `p_x`
/// the probability that `x` is selected.
pub fn theorem4_check(
    model: &Model,
    w: &ParamVector,
    dataset: &Dataset,
    p: &[f64],
    rho: f64,
    seed: u64,
) -> Result<Theorem4Report> {
    if dataset.len() > MAX_ENUMERATED {
        return Err(Error::Precondition(format!(
            "exact enumeration limited to {MAX_ENUMERATED} samples, got {}",
            dataset.len()
        )));
    }
    let grads = model.per_sample_gradients(w, &dataset.as_batch()?)?;
    let (lhs, rhs, g_norm) = eq11_terms(&grads, p, rho)?;
    let rate = p.iter().sum::<f64>() / p.len() as f64;
    Ok(Theorem4Report {
        bound: BoundReport::new(
            lhs,
            rhs,
            InstanceDescriptor {
                model: model.describe(),
                k: dataset.len(),
                n: 0,
                rho,
                seed,
            },
        ),
        dataset_grad_norm: g_norm,
        mean_selection_rate: rate,
    })
}

/// `(lhs, rhs, ‖∇L_D‖)` for per-sample gradients and selection probabilities.
pub(crate) fn eq11_terms(grads: &[Gradient], p: &[f64], rho: f64) -> Result<(f64, f64, f64)> {
    if grads.len() != p.len() {
        return Err(Error::Precondition(format!(
            "{} probabilities for {} samples",
            p.len(),
            grads.len()
        )));
    }
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Precondition(format!("selection probability {bad} outside [0, 1]")));
    }
    let dim = grads.first().map_or(0, |g| g.len());
    let g_d = average(&grads.iter().collect::<Vec<_>>(), dim);
    let eps = sam_perturbation(&g_d, rho)?;
    let n = grads.len() as f64;
    let mut signed = 0.0;
    let mut weighted = 0.0;
    for (g, &px) in grads.iter().zip(p) {
        signed += (1.0 - px) * vecops::dot(&eps, g);
        weighted += (1.0 - px) * g.norm();
    }
    Ok(((signed / n).abs(), rho * weighted / n, g_d.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_quadratic_problem, QuadraticSpec};

    fn instance() -> (Model, Dataset, ParamVector) {
        let mut spec = QuadraticSpec::new(3, 5.0, 4);
        spec.samples = 20;
        let (model, ds) = make_quadratic_problem(&spec).unwrap();
        let w = model.init_params(9);
        (model, ds, w)
    }

    #[test]
    fn full_selection_is_unbiased() {
        let (model, ds, w) = instance();
        let r = theorem4_check(&model, &w, &ds, &[1.0; 20], 0.1, 0).unwrap();
        assert_eq!((r.bound.lhs, r.bound.rhs), (0.0, 0.0));
        assert!(r.bound.holds);
    }

    #[test]
    fn empty_selection_is_cauchy_schwarz() {
        let (model, ds, w) = instance();
        let r = theorem4_check(&model, &w, &ds, &[0.0; 20], 0.1, 0).unwrap();
        // With p ≡ 0 the left side is ρ·‖∇L_D‖ exactly.
        assert!((r.bound.lhs - 0.1 * r.dataset_grad_norm).abs() < 1e-12);
        assert!(r.bound.holds && r.bound.slack > 0.0);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let (model, ds, w) = instance();
        assert!(theorem4_check(&model, &w, &ds, &[1.5; 20], 0.1, 0).is_err());
        assert!(theorem4_check(&model, &w, &ds, &[0.5; 3], 0.1, 0).is_err());
    }

    #[test]
    fn zero_dataset_gradient_is_an_error() {
        use crate::data::{Provenance, Task};
        use crate::model::{Quadratic, Sample, Target};
        let model = Model::quadratic(Quadratic::diagonal(&[1.0, 1.0], vec![1.0, 2.0]));
        let samples = vec![
            Sample::new(0, vec![0.5, 0.0], Target::Value(0.0)),
            Sample::new(1, vec![-0.5, 0.0], Target::Value(0.0)),
        ];
        let ds = Dataset::new(samples, Task::Regression, Provenance::Derived("test".into())).unwrap();
        let w = ParamVector(vec![1.0, 2.0]);
        let r = theorem4_check(&model, &w, &ds, &[0.5, 0.5], 0.1, 0);
        assert!(matches!(r, Err(Error::ZeroGradient)), "{r:?}");
    }
}
