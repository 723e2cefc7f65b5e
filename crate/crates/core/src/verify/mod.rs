//! Brute-force numerical checks of the inequalities behind loss-difference
//! subsampling. Every check recomputes per-sample gradients one sample at a
//! time, independently of the batched backward pass the optimizers use.
//!
//! | check | statement |
//! |---|---|
//! | [`theorem1_check`] | full-batch vs subset perturbation gap is bounded by the unselected gradient norms |
//! | [`lemma1_check`] | `DLP/ρ` approximates the directional derivative to first order |
//! | [`theorem2_check`] | epoch-averaged gradient norms track the current one under `η₀/t²` |
//! | [`theorem3_proxy`] | running mean of `‖∇L_D‖²` keeps decreasing in the convergent regime |
//! | [`theorem4_check`] | selection bias is bounded by `ρ·E[(1−p)‖∇L_x‖]` |
//! | [`bias_vs_random`] | the same bound under learned vs uniform selection |

mod bias;
mod lemma1;
mod suite;
mod theorem1;
mod theorem2;
mod theorem3;
mod theorem4;

use serde::{Deserialize, Serialize};

pub use bias::{bias_vs_random, BiasAudit, BiasRow, BiasSettings, Checkpoint};
pub use lemma1::{lemma1_check, lemma1_scaling, Lemma1Report, Lemma1Scaling};
pub use suite::{
    lemma1_suite, random_instance, theorem1_suite, theorem2_suite, theorem3_suite,
    theorem4_suite, InstanceKind, Lemma1Case, RandomInstance, SuiteName,
};
pub use theorem1::{theorem1_check, Theorem1Report};
pub use theorem2::{theorem2_check, Theorem2Report, Theorem2Setup};
pub use theorem3::{theorem3_proxy, Theorem3Report, Theorem3Setup};
pub use theorem4::{theorem4_check, Theorem4Report, MAX_ENUMERATED};

use crate::model::{Gradient, MiniBatch, Model, ParamVector};
use crate::Result;

/// Which problem a report was computed on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub model: String,
    /// Batch (or dataset) size.
    pub k: usize,
    /// Selected subset size, when the check has one.
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

/// `lhs ≤ rhs`, with `slack = rhs − lhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub instance: InstanceDescriptor,
    /// Set when a gradient in the instance vanished.
    pub flagged: bool,
}

/// Rounding allowance for exact inequalities: `slack ≥ −1e-9·max(1, |rhs|)`.
pub fn bound_holds(lhs: f64, rhs: f64) -> bool {
    rhs - lhs >= -1e-9 * rhs.abs().max(1.0)
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: f64, instance: InstanceDescriptor) -> Self {
        BoundReport {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: bound_holds(lhs, rhs),
            instance,
            flagged: false,
        }
    }
}

/// Mean of per-sample gradients, summed in the given order.
pub(crate) fn average(grads: &[&Gradient], dim: usize) -> Gradient {
    let mut out = Gradient::zeros(dim);
    for g in grads {
        for (o, v) in out.iter_mut().zip(g.iter()) {
            *o += v;
        }
    }
    let n = grads.len().max(1) as f64;
    out.iter_mut().for_each(|v| *v /= n);
    out
}

pub(crate) fn oracle_gradients(
    model: &Model,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
) -> Result<Vec<Gradient>> {
    model.per_sample_gradients(w, batch)
}
