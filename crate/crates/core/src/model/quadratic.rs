use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gradient, MiniBatch, ParamVector};
use crate::vecops;

/// `L_x(w) = ½ wᵀAw − (b + δ_x)ᵀw`, where the per-sample offset `δ_x` is the
/// sample's feature vector. Every sample shares the Hessian `A`, so each
/// per-sample loss and every batch average is `λ_max(A)`-smooth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub dim: usize,
    /// Row-major `dim × dim`, symmetric positive semi-definite.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Quadratic {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let dim = b.len();
        if dim == 0 {
            return Err(Error::config("quadratic", "dimension must be at least 1"));
        }
        if a.len() != dim * dim {
            return Err(Error::config(
                "quadratic.a",
                format!("expected {} entries, got {}", dim * dim, a.len()),
            ));
        }
        for i in 0..dim {
            for j in 0..i {
                if (a[i * dim + j] - a[j * dim + i]).abs() > 1e-12 * (1.0 + a[i * dim + j].abs()) {
                    return Err(Error::config("quadratic.a", "matrix is not symmetric"));
                }
            }
        }
        if !vecops::all_finite(&a) || !vecops::all_finite(&b) {
            return Err(Error::config("quadratic", "non-finite entries"));
        }
        Ok(Quadratic { dim, a, b })
    }

    pub fn identity(dim: usize) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = 1.0;
        }
        Quadratic {
            dim,
            a,
            b: vec![0.0; dim],
        }
    }

    pub fn diagonal(diag: &[f64], b: Vec<f64>) -> Self {
        let dim = diag.len();
        let mut a = vec![0.0; dim * dim];
        for (i, &v) in diag.iter().enumerate() {
            a[i * dim + i] = v;
        }
        Quadratic { dim, a, b }
    }

    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.a)
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| vecops::dot(&self.a[i * self.dim..(i + 1) * self.dim], w))
            .collect()
    }

    /// Largest eigenvalue of `A`.
    pub fn smoothness(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.matrix());
        eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimizer `A⁻¹(b + mean δ)` of the average loss over `offsets_mean`.
    pub fn minimizer(&self, offsets_mean: &[f64]) -> Option<Vec<f64>> {
        let rhs = nalgebra::DVector::from_iterator(
            self.dim,
            self.b.iter().zip(offsets_mean).map(|(b, d)| b + d),
        );
        self.matrix()
            .cholesky()
            .map(|c| c.solve(&rhs).iter().copied().collect())
    }

    pub(crate) fn evaluate(
        &self,
        w: &ParamVector,
        batch: &MiniBatch<'_>,
        want_grad: bool,
    ) -> Result<(Vec<f64>, Option<Gradient>)> {
        let aw = self.apply(w);
        let half_quad = 0.5 * vecops::dot(w, &aw);
        let linear = vecops::dot(&self.b, w);
        let k = batch.len() as f64;
        let mut losses = Vec::with_capacity(batch.len());
        let mut offset_sum = vec![0.0; self.dim];
        for s in batch.samples() {
            if s.features.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    id: s.id,
                    expected: self.dim,
                    got: s.features.len(),
                });
            }
            losses.push(half_quad - linear - vecops::dot(&s.features, w));
            if want_grad {
                vecops::axpy(1.0, &s.features, &mut offset_sum);
            }
        }
        super::check_finite(&losses, "quadratic loss")?;
        let grad = want_grad.then(|| {
            Gradient(
                aw.iter()
                    .zip(&self.b)
                    .zip(&offset_sum)
                    .map(|((a, b), o)| a - b - o / k)
                    .collect(),
            )
        });
        Ok((losses, grad))
    }
}
