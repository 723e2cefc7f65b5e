use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MiniBatch, Model, ParamVector};
use crate::vecops;

/// One evaluation of the loss-difference proxy for sample `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub rho: f64,
    /// `|L_x(w + ρu) − L_x(w)| / ρ` with `u = ∇L_B/‖∇L_B‖`.
    pub dlp_over_rho: f64,
    /// `|u·∇L_x(w)|`
    pub directional_derivative: f64,
    /// `‖∇L_x(w)‖`, reported but not compared against.
    pub norm: f64,
    pub first_order_error: f64,
}

pub fn lemma1_check(
    model: &Model,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    sample_index: usize,
    rho: f64,
) -> Result<Lemma1Report> {
    let sample = *batch
        .samples()
        .get(sample_index)
        .ok_or_else(|| Error::Precondition(format!("sample index {sample_index} out of range")))?;
    let g_batch = model.batch_gradient(w, batch)?;
    let batch_norm = g_batch.norm();
    if batch_norm.is_nan() || batch_norm <= 0.0 {
        return Err(Error::ZeroGradient);
    }
    let u: Vec<f64> = g_batch.iter().map(|g| g / batch_norm).collect();
    let step: Vec<f64> = u.iter().map(|v| v * rho).collect();
    let single = MiniBatch::new(vec![sample])?;
    let before = model.per_sample_losses(w, &single)?[0];
    let after = model.per_sample_losses(&w.offset_by(&step), &single)?[0];
    let g_x = model.per_sample_gradient(w, sample)?;
    let dlp_over_rho = (after - before).abs() / rho;
    let directional = vecops::dot(&u, &g_x).abs();
    Ok(Lemma1Report {
        rho,
        dlp_over_rho,
        directional_derivative: directional,
        norm: g_x.norm(),
        first_order_error: (dlp_over_rho - directional).abs(),
    })
}

/// Error ratios under halving: for each `ρ`, `error(ρ/2) / error(ρ)`. A
/// first-order-accurate proxy gives ratios near 0.5.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Scaling {
    pub reports: Vec<Lemma1Report>,
    pub halved: Vec<Lemma1Report>,
    pub ratios: Vec<f64>,
}

pub fn lemma1_scaling(
    model: &Model,
    w: &ParamVector,
    batch: &MiniBatch<'_>,
    sample_index: usize,
    rhos: &[f64],
) -> Result<Lemma1Scaling> {
    let mut reports = Vec::with_capacity(rhos.len());
    let mut halved = Vec::with_capacity(rhos.len());
    let mut ratios = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let full = lemma1_check(model, w, batch, sample_index, rho)?;
        let half = lemma1_check(model, w, batch, sample_index, rho / 2.0)?;
        ratios.push(half.first_order_error / full.first_order_error);
        reports.push(full);
        halved.push(half);
    }
    Ok(Lemma1Scaling {
        reports,
        halved,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Quadratic, Sample, Target};

    fn diag_model() -> Model {
        Model::quadratic(Quadratic::diagonal(&[1.0, 3.0], vec![0.0, 0.0]))
    }

    #[test]
    fn aligned_sample_recovers_gradient_norm() {
        // Every sample has zero offset, so each per-sample gradient equals
        // the batch gradient.
        let s: Vec<Sample> = (0..3)
            .map(|i| Sample::new(i, vec![0.0, 0.0], Target::Value(0.0)))
            .collect();
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![1.0, 2.0]);
        let mut last = f64::INFINITY;
        for rho in [1e-2, 1e-3, 1e-4, 1e-5] {
            let r = lemma1_check(&diag_model(), &w, &b, 1, rho).unwrap();
            assert!((r.directional_derivative - r.norm).abs() < 1e-12);
            let gap = (r.dlp_over_rho - r.norm).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn orthogonal_sample_is_second_order() {
        // Batch gradient at w = (1, 0) is (1, 0) when offsets cancel; sample 0
        // has gradient (1 - 1, 0 - 1) = (0, -1), orthogonal to it.
        let model = Model::quadratic(Quadratic::identity(2));
        let s = vec![
            Sample::new(0, vec![1.0, 1.0], Target::Value(0.0)),
            Sample::new(1, vec![-1.0, -1.0], Target::Value(0.0)),
        ];
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![1.0, 0.0]);
        for rho in [1e-2, 1e-3] {
            let r = lemma1_check(&model, &w, &b, 0, rho).unwrap();
            assert!(r.directional_derivative < 1e-15);
            // L_x(w + ρu) − L_x(w) = ρ·0 + ½ρ²
            assert!((r.dlp_over_rho - 0.5 * rho).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_batch_gradient_is_an_error() {
        let s = vec![Sample::new(0, vec![0.0, 0.0], Target::Value(0.0))];
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![0.0, 0.0]);
        assert!(matches!(
            lemma1_check(&diag_model(), &w, &b, 0, 0.1),
            Err(Error::ZeroGradient)
        ));
    }

    #[test]
    fn quadratic_error_halves_exactly() {
        let s = vec![
            Sample::new(0, vec![0.3, -0.2], Target::Value(0.0)),
            Sample::new(1, vec![-0.3, 0.2], Target::Value(0.0)),
        ];
        let b = MiniBatch::from_slice(&s).unwrap();
        let w = ParamVector(vec![1.0, -2.0]);
        let sc = lemma1_scaling(&diag_model(), &w, &b, 0, &[1e-2, 1e-3]).unwrap();
        for r in sc.ratios {
            assert!((r - 0.5).abs() < 1e-6, "{r}");
        }
    }
}
