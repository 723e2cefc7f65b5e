use serde::{Deserialize, Serialize};

use super::{average, oracle_gradients, BoundReport, InstanceDescriptor};
use crate::error::{Error, Result};
use crate::model::{MiniBatch, Model, ParamVector};
use crate::optim::sam_perturbation;
use crate::vecops;

/// Full-batch vs subset perturbation gap.
///
/// `bound` holds the first-order form `ρ·|‖∇L_B‖ − ‖∇L_B̂‖| ≤ (ρ/M)·Σ_{x∉B̂} ‖∇L_x‖`.
/// With `L_B` the batch mean this is not an identity: `∇L_B − ∇L_B̂`
/// equals `(M/K)(∇L_B̌ − ∇L_B̂)`, not the unselected mean `∇L_B̌`, so the
/// inequality can fail when the unselected gradients are small. The
/// always-valid mean-normalized bound `ρ·‖∇L_B − ∇L_B̂‖ ≤ (ρ/K)·Σ_{x∉B̂}
/// ‖∇L_x − ∇L_B̂‖` is reported alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    #[serde(flatten)]
    pub bound: BoundReport,
    pub full_grad_norm: f64,
    pub subset_grad_norm: f64,
    /// `|PTF − PTS|` evaluated with the real perturbed losses.
    pub finite_gap: f64,
    /// `|(PTF − PTS) − ρ(‖∇L_B‖ − ‖∇L_B̂‖)|`.
    pub second_order_residual: f64,
    pub mean_normalized_rhs: f64,
    pub mean_normalized_holds: bool,
}

/// `subset` holds batch positions; it must be a non-empty proper subset.
pub fn theorem1_check(
    model: &Model,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    subset: &[usize],
    rho: f64,
    seed: u64,
) -> Result<Theorem1Report> {
    let k = batch.len();
    if subset.is_empty() || subset.len() >= k {
        return Err(Error::Precondition(format!(
            "subset size {} must be in [1, {})",
            subset.len(),
            k
        )));
    }
    let sub_batch = batch.select(subset)?;
    let mut in_subset = vec![false; k];
    for &p in subset {
        in_subset[p] = true;
    }
    let grads = oracle_gradients(model, w, batch)?;
    let dim = w.len();
    let g_full = average(&grads.iter().collect::<Vec<_>>(), dim);
    let g_sub = average(
        &grads
            .iter()
            .zip(&in_subset)
            .filter(|(_, &s)| s)
            .map(|(g, _)| g)
            .collect::<Vec<_>>(),
        dim,
    );
    let rest: Vec<_> = grads
        .iter()
        .zip(&in_subset)
        .filter(|(_, &s)| !s)
        .map(|(g, _)| g)
        .collect();
    let m = rest.len() as f64;

    let (full_norm, sub_norm) = (g_full.norm(), g_sub.norm());
    let lhs = rho * (full_norm - sub_norm).abs();
    let rhs = rho / m * rest.iter().map(|g| g.norm()).sum::<f64>();

    let mn_lhs = rho * vecops::norm(&vecops::sub(&g_full, &g_sub));
    let mn_rhs = rho / k as f64
        * rest
            .iter()
            .map(|g| vecops::norm(&vecops::sub(g, &g_sub)))
            .sum::<f64>();

    let mut flagged = false;
    let mut gap = |b: &MiniBatch<'_>, g: &crate::model::Gradient| -> Result<f64> {
        match sam_perturbation(g, rho) {
            Ok(eps) => Ok(model.batch_loss(&w.offset_by(&eps), b)? - model.batch_loss(w, b)?),
            Err(Error::ZeroGradient) => {
                flagged = true;
                Ok(0.0)
            }
            Err(e) => Err(e),
        }
    };
    let ptf = gap(batch, &g_full)?;
    let pts = gap(&sub_batch, &g_sub)?;

    let mut bound = BoundReport::new(
        lhs,
        rhs,
        InstanceDescriptor {
            model: model.describe(),
            k,
            n: subset.len(),
            rho,
            seed,
        },
    );
    bound.flagged = flagged;
    Ok(Theorem1Report {
        bound,
        full_grad_norm: full_norm,
        subset_grad_norm: sub_norm,
        finite_gap: (ptf - pts).abs(),
        second_order_residual: ((ptf - pts) - rho * (full_norm - sub_norm)).abs(),
        mean_normalized_rhs: mn_rhs,
        mean_normalized_holds: super::bound_holds(mn_lhs, mn_rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Quadratic, Sample, Target};

    #[test]
    fn full_subset_rejected() {
        let model = Model::quadratic(Quadratic::identity(2));
        let s: Vec<Sample> = (0..3)
            .map(|i| Sample::new(i, vec![i as f64, 0.0], Target::Value(0.0)))
            .collect();
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![1.0, 1.0]);
        assert!(theorem1_check(&model, &w, &b, &[0, 1, 2], 0.1, 0).is_err());
        assert!(theorem1_check(&model, &w, &b, &[], 0.1, 0).is_err());
    }

    #[test]
    fn identical_gradients_give_zero_lhs() {
        let model = Model::quadratic(Quadratic::identity(3));
        let s: Vec<Sample> = (0..5)
            .map(|i| Sample::new(i, vec![0.5, -1.0, 2.0], Target::Value(0.0)))
            .collect();
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![1.0, 2.0, 3.0]);
        let r = theorem1_check(&model, &w, &b, &[1, 3], 0.01, 0).unwrap();
        assert_eq!(r.bound.lhs, 0.0);
        assert!(r.bound.holds && r.bound.rhs > 0.0);
        // Same gradient everywhere: both perturbation gaps coincide.
        assert!(r.finite_gap < 1e-15);
    }

    #[test]
    fn small_unselected_gradients_break_the_unnormalized_form() {
        // Two samples with gradient (1, 0) selected, one with gradient 0 left
        // out: ‖∇L_B‖ = 2/3, ‖∇L_B̂‖ = 1, unselected norm sum = 0.
        let model = Model::quadratic(Quadratic::identity(2));
        let s = vec![
            Sample::new(0, vec![-1.0, 0.0], Target::Value(0.0)),
            Sample::new(1, vec![-1.0, 0.0], Target::Value(0.0)),
            Sample::new(2, vec![0.0, 0.0], Target::Value(0.0)),
        ];
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![0.0, 0.0]);
        let r = theorem1_check(&model, &w, &b, &[0, 1], 0.1, 0).unwrap();
        assert!((r.bound.lhs - 0.1 / 3.0).abs() < 1e-15);
        assert_eq!(r.bound.rhs, 0.0);
        assert!(!r.bound.holds);
        assert!(r.mean_normalized_holds);
    }
}
