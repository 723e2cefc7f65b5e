//! Seeded random instance generators and the suites built on them.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    lemma1_check, lemma1_scaling, theorem1_check, theorem2_check, theorem3_proxy, theorem4_check,
    Lemma1Scaling, Theorem1Report, Theorem2Report, Theorem2Setup, Theorem3Report, Theorem3Setup,
    Theorem4Report,
};
use crate::data::{make_quadratic_problem, Dataset, EpochPlan, Provenance, QuadraticSpec, Task};
use crate::error::{Error, Result};
use crate::model::{MiniBatch, Model, ParamVector, Sample, Target};
use crate::sampler::{batch_probabilities, inclusion_probabilities, subset_size, AdlpTable, SamplerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Quadratic,
    Mlp,
}

/// A model, a batch of samples and a weight vector, all drawn from one seed.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub kind: InstanceKind,
    pub model: Model,
    pub samples: Vec<Sample>,
    pub w: ParamVector,
    pub seed: u64,
}

impl RandomInstance {
    pub fn batch(&self) -> MiniBatch<'_> {
        MiniBatch::from_slice(&self.samples).expect("generated batches are valid")
    }
}

/// Quadratics get dimension 2–8 and condition number up to 20; MLPs get one
/// hidden layer of width 4–12, 2–5 inputs and 2–4 classes.
pub fn random_instance(kind: InstanceKind, k: usize, seed: u64) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        InstanceKind::Quadratic => {
            let mut spec = QuadraticSpec::new(
                rng.random_range(2..=8),
                rng.random_range(1.0..20.0),
                rng.random(),
            );
            spec.samples = k;
            let (model, ds) = make_quadratic_problem(&spec)?;
            let w = model.init_params(rng.random());
            Ok(RandomInstance {
                kind,
                model,
                samples: ds.samples().to_vec(),
                w,
                seed,
            })
        }
        InstanceKind::Mlp => {
            let inputs = rng.random_range(2..=5);
            let classes = rng.random_range(2..=4);
            let model = Model::mlp(vec![inputs, rng.random_range(4..=12), classes])?;
            let normal = Normal::new(0.0, 1.0).unwrap();
            let samples = (0..k)
                .map(|id| {
                    let x = (0..inputs).map(|_| normal.sample(&mut rng)).collect();
                    Sample::new(id, x, Target::Class(rng.random_range(0..classes)))
                })
                .collect();
            // Nonzero biases so hidden units are not all pinned at the origin.
            let mut w = model.init_params(rng.random());
            for v in w.iter_mut() {
                *v += 0.1 * normal.sample(&mut rng);
            }
            Ok(RandomInstance {
                kind,
                model,
                samples,
                w,
                seed,
            })
        }
    }
}

fn instance_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

/// Alternating quadratic/MLP instances with `K ∈ [2, 16]`, a random proper
/// subset and `ρ` alternating between `1e-2` and `1e-3`.
pub fn theorem1_suite(instances: usize, seed: u64) -> Result<Vec<Theorem1Report>> {
    instance_seeds(seed, instances)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let kind = if i % 2 == 0 { InstanceKind::Quadratic } else { InstanceKind::Mlp };
            let k = rng.random_range(2..=16);
            let inst = random_instance(kind, k, rng.random())?;
            let n = rng.random_range(1..k);
            let mut subset = sample_indices(&mut rng, k, n).into_vec();
            subset.sort_unstable();
            let rho = if (i / 2) % 2 == 0 { 1e-2 } else { 1e-3 };
            theorem1_check(&inst.model, &inst.w, &inst.batch(), &subset, rho, s)
        })
        .collect()
}

/// Radii used for the halving test on each model family.
pub const QUADRATIC_RHOS: [f64; 2] = [1e-2, 1e-3];
pub const MLP_RHOS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Case {
    pub kind: InstanceKind,
    pub model: String,
    pub seed: u64,
    pub sample_index: usize,
    /// Candidates drawn before an admissible one was found.
    pub attempts: usize,
    pub scaling: Lemma1Scaling,
    /// Every halving ratio in range: exactly 0.5 (±1e-6) on quadratics,
    /// `[0.3, 0.7]` otherwise.
    pub holds: bool,
}

/// Lemma-1 halving test on alternating quadratic/MLP instances.
///
/// The first-order expansion only describes the loss where it is smooth and
/// where the linear term dominates, so candidates are redrawn when, for the
/// largest radius, the ReLU pattern of the sample changes along the step or
/// the second-order error exceeds half the directional derivative (which
/// could flip the sign inside `|·|`).
pub fn lemma1_suite(instances: usize, seed: u64) -> Result<Vec<Lemma1Case>> {
    const MAX_ATTEMPTS: usize = 50;
    let mut out = Vec::with_capacity(instances);
    for (i, s) in instance_seeds(seed, instances).into_iter().enumerate() {
        let kind = if i % 2 == 0 { InstanceKind::Quadratic } else { InstanceKind::Mlp };
        let rhos: &[f64] = match kind {
            InstanceKind::Quadratic => &QUADRATIC_RHOS,
            InstanceKind::Mlp => &MLP_RHOS,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut found = None;
        for attempt in 1..=MAX_ATTEMPTS {
            let k = rng.random_range(2..=16);
            let inst = random_instance(kind, k, rng.random())?;
            let idx = rng.random_range(0..k);
            if admissible(&inst, idx, rhos)? {
                found = Some((inst, idx, attempt));
                break;
            }
        }
        let (inst, idx, attempts) = found.ok_or_else(|| {
            Error::Precondition(format!("no admissible lemma-1 instance for seed {s}"))
        })?;
        let scaling = lemma1_scaling(&inst.model, &inst.w, &inst.batch(), idx, rhos)?;
        let holds = scaling.ratios.iter().all(|&r| match kind {
            InstanceKind::Quadratic => (r - 0.5).abs() <= 1e-6,
            InstanceKind::Mlp => (0.3..=0.7).contains(&r),
        });
        out.push(Lemma1Case {
            kind,
            model: inst.model.describe(),
            seed: s,
            sample_index: idx,
            attempts,
            scaling,
            holds,
        });
    }
    Ok(out)
}

fn admissible(inst: &RandomInstance, idx: usize, rhos: &[f64]) -> Result<bool> {
    let batch = inst.batch();
    let rho_max = rhos.iter().cloned().fold(0.0, f64::max);
    let report = match lemma1_check(&inst.model, &inst.w, &batch, idx, rho_max) {
        Ok(r) => r,
        Err(Error::ZeroGradient) => return Ok(false),
        Err(e) => return Err(e),
    };
    // NaN on either side counts as inadmissible.
    let admissible = report.first_order_error < 0.5 * report.directional_derivative;
    if !admissible {
        return Ok(false);
    }
    let sample = &inst.samples[idx];
    if let Some(base) = inst.model.relu_pattern(&inst.w, sample) {
        let g = inst.model.batch_gradient(&inst.w, &batch)?;
        let norm = g.norm();
        let step: Vec<f64> = g.iter().map(|v| v * rho_max / norm).collect();
        if inst.model.relu_pattern(&inst.w.offset_by(&step), sample) != Some(base) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Quadratic AUSAM runs with `d ≤ 10` and `T ≤ 20` under `η₀/t²`.
pub fn theorem2_suite(instances: usize, seed: u64) -> Result<Vec<Theorem2Report>> {
    instance_seeds(seed, instances)
        .into_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut spec = QuadraticSpec::new(
                rng.random_range(2..=10),
                rng.random_range(1.0..10.0),
                rng.random(),
            );
            spec.samples = rng.random_range(16..=64);
            let (model, ds) = make_quadratic_problem(&spec)?;
            let setup = Theorem2Setup {
                eta0: [0.01, 0.05, 0.1, 0.2][rng.random_range(0..4)],
                batch_size: rng.random_range(4..=16),
                epochs: rng.random_range(2..=20),
                rho: [0.01, 0.05, 0.1][rng.random_range(0..3)],
                alpha: [0.4, 0.5, 0.6, 0.7, 1.0][rng.random_range(0..5)],
                sample_index: rng.random_range(0..spec.samples),
                seed: rng.random(),
                w0: None,
            };
            theorem2_check(&model, &ds, &setup)
        })
        .collect()
}

/// Quadratic runs in the convergent regime (`η = 1/(2τ)`, `ρ = 1/(4τ)`),
/// started far from the minimizer.
pub fn theorem3_suite(instances: usize, seed: u64) -> Result<Vec<Theorem3Report>> {
    instance_seeds(seed, instances)
        .into_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut spec = QuadraticSpec::new(
                rng.random_range(2..=6),
                rng.random_range(1.0..10.0),
                rng.random(),
            );
            spec.offset_sd = 0.1;
            let (model, ds) = make_quadratic_problem(&spec)?;
            let tau = model.smoothness_constant().expect("quadratic");
            let w0 = model.init_params(rng.random()).iter().map(|v| 10.0 * v).collect();
            let setup = Theorem3Setup {
                eta: 0.5 / tau,
                rho: 0.25 / tau,
                steps: 60,
                batch_size: 16,
                alpha: 0.5,
                burn_in: 10,
                seed: s,
                w0: Some(ParamVector(w0)),
            };
            theorem3_proxy(&model, &ds, &setup)
        })
        .collect()
}

/// Exact enumeration over datasets of 16–128 samples. The first instance
/// uses `p ≡ 1`, the second `p ≡ 0`; the rest use the inclusion
/// probabilities of `⌈αK⌉` draws from score-weighted batches.
pub fn theorem4_suite(instances: usize, seed: u64) -> Result<Vec<Theorem4Report>> {
    instance_seeds(seed, instances)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let kind = if i % 2 == 0 { InstanceKind::Quadratic } else { InstanceKind::Mlp };
            let n = rng.random_range(16..=128);
            let inst = random_instance(kind, n, rng.random())?;
            let task = match kind {
                InstanceKind::Quadratic => Task::Regression,
                InstanceKind::Mlp => Task::Classification {
                    classes: inst.model.classes().expect("classifier"),
                },
            };
            let ds = Dataset::new(inst.samples.clone(), task, Provenance::Derived("random instance".into()))?;
            let p = match i {
                0 => vec![1.0; n],
                1 => vec![0.0; n],
                _ => scored_inclusion(&ds, &mut rng)?,
            };
            let rho = [1e-2, 1e-1][i % 2];
            theorem4_check(&inst.model, &inst.w, &ds, &p, rho, s)
        })
        .collect()
}

fn scored_inclusion(ds: &Dataset, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut table = AdlpTable::new();
    for s in ds.samples() {
        table.push(s.id, rng.random_range(0.0..1.0))?;
    }
    let cfg = SamplerConfig {
        alpha: [0.4, 0.5, 0.6, 0.7][rng.random_range(0..4)],
        ..SamplerConfig::default()
    };
    let k = rng.random_range(4..=32).min(ds.len());
    let plan = EpochPlan::new(ds.len(), k, rng.random(), 0)?;
    let mut p = vec![0.0; ds.len()];
    for batch in plan.batches(ds)? {
        let scores = batch_probabilities(&table, &batch, &cfg, cfg.e_start);
        let n = subset_size(cfg.alpha, batch.len());
        let inc = inclusion_probabilities(&scores.probabilities, n, 200, rng)?;
        for (s, v) in batch.samples().iter().zip(inc) {
            p[s.id] = v;
        }
    }
    Ok(p)
}

/// Suites the CLI can run by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Thm1,
    Lemma1,
    Thm2,
    Thm3,
    Thm4,
    All,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Thm1,
        SuiteName::Lemma1,
        SuiteName::Thm2,
        SuiteName::Thm3,
        SuiteName::Thm4,
        SuiteName::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Thm1 => "thm1",
            SuiteName::Lemma1 => "lemma1",
            SuiteName::Thm2 => "thm2",
            SuiteName::Thm3 => "thm3",
            SuiteName::Thm4 => "thm4",
            SuiteName::All => "all",
        }
    }

    /// The concrete suites this name expands to.
    pub fn expand(self) -> Vec<SuiteName> {
        match self {
            SuiteName::All => SuiteName::ALL[..5].to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::config(
                    "suite",
                    format!("unknown suite {s:?}; expected thm1, lemma1, thm2, thm3, thm4 or all"),
                )
            })
    }
}
