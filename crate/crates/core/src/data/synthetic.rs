use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Dataset, Provenance, Task};
use crate::error::{Error, Result};
use crate::model::{Model, Quadratic, Sample, Target};

/// Two interleaved half circles: class 0 on the unit upper arc, class 1 on
/// the unit lower arc shifted by `(1, 0.5)`. Points are evenly spaced along
/// each arc, perturbed by isotropic Gaussian noise, then shuffled so that
/// any prefix mixes both classes.
pub fn make_two_moons(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::config("dataset.n", "two-moons needs an even n >= 2"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::config("dataset.noise", "must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let step = if half > 1 { PI / (half - 1) as f64 } else { 0.0 };
    let mut points: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
    for i in 0..half {
        let t = i as f64 * step;
        points.push((t.cos(), t.sin(), 0));
    }
    for i in 0..half {
        let t = i as f64 * step;
        points.push((1.0 - t.cos(), 0.5 - t.sin(), 1));
    }
    if noise_sd > 0.0 {
        let normal = Normal::new(0.0, noise_sd).unwrap();
        for p in points.iter_mut() {
            p.0 += normal.sample(&mut rng);
            p.1 += normal.sample(&mut rng);
        }
    }
    points.shuffle(&mut rng);
    let samples = points
        .into_iter()
        .enumerate()
        .map(|(id, (x, y, c))| Sample::new(id, vec![x, y], Target::Class(c)))
        .collect();
    Dataset::new(
        samples,
        Task::Classification { classes: 2 },
        Provenance::Synthetic(format!("two-moons(n={n}, noise={noise_sd}, seed={seed})")),
    )
}

/// Random quadratic problem with known curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSpec {
    pub dim: usize,
    /// `λ_max / λ_min` of `A`; eigenvalues are geometrically spaced in
    /// `[1, condition]`.
    pub condition: f64,
    pub samples: usize,
    /// Standard deviation of the per-sample offsets before centering.
    pub offset_sd: f64,
    pub seed: u64,
}

impl QuadraticSpec {
    pub fn new(dim: usize, condition: f64, seed: u64) -> Self {
        QuadraticSpec {
            dim,
            condition,
            samples: 64,
            offset_sd: 0.5,
            seed,
        }
    }
}

/// Builds `A = Q diag(λ) Qᵀ` with a random orthogonal `Q`, a random `b`, and
/// per-sample offsets `δ_i` centered to mean zero so the dataset average of
/// the per-sample losses is exactly `½wᵀAw − bᵀw` (up to rounding).
pub fn make_quadratic_problem(spec: &QuadraticSpec) -> Result<(Model, Dataset)> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::config("dataset.dim", "must be at least 1"));
    }
    if !(spec.condition >= 1.0 && spec.condition.is_finite()) {
        return Err(Error::config("dataset.condition", "must be finite and >= 1"));
    }
    if spec.samples == 0 {
        return Err(Error::config("dataset.n", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();

    let eigenvalues: Vec<f64> = (0..d)
        .map(|i| {
            if d == 1 {
                1.0
            } else {
                spec.condition.powf(i as f64 / (d - 1) as f64)
            }
        })
        .collect();
    let gauss = DMatrix::from_fn(d, d, |_, _| normal.sample(&mut rng));
    let q = gauss.qr().q();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues));
    let a = &q * lambda * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let mut a_rows = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            a_rows.push(a[(i, j)]);
        }
    }
    let b: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();

    let mut offsets: Vec<Vec<f64>> = (0..spec.samples)
        .map(|_| (0..d).map(|_| spec.offset_sd * normal.sample(&mut rng)).collect())
        .collect();
    let mut mean = vec![0.0; d];
    for o in &offsets {
        for (m, v) in mean.iter_mut().zip(o) {
            *m += v / spec.samples as f64;
        }
    }
    for o in offsets.iter_mut() {
        for (v, m) in o.iter_mut().zip(&mean) {
            *v -= m;
        }
    }

    let model = Model::quadratic(Quadratic::new(a_rows, b)?);
    let samples = offsets
        .into_iter()
        .enumerate()
        .map(|(id, o)| Sample::new(id, o, Target::Value(0.0)))
        .collect();
    let dataset = Dataset::new(
        samples,
        Task::Regression,
        Provenance::Synthetic(format!(
            "quadratic(d={d}, condition={}, n={}, seed={})",
            spec.condition, spec.samples, spec.seed
        )),
    )?;
    Ok((model, dataset))
}
