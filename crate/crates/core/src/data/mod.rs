//! Datasets with stable sample identities, and deterministic epoch batching.

mod csv_io;
mod idx;
mod synthetic;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use idx::load_idx;
pub use synthetic::{make_quadratic_problem, make_two_moons, QuadraticSpec};

use crate::error::{Error, Result};
use crate::model::{MiniBatch, Sample, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification { classes: usize },
    Regression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Synthetic(String),
    File { path: String, sha256: String },
    Derived(String),
}

/// Immutable collection of samples whose ids are exactly `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_dim: usize,
    task: Task,
    provenance: Provenance,
}

impl Dataset {
    /// Validates ids, feature widths, finiteness and labels.
    pub fn new(samples: Vec<Sample>, task: Task, provenance: Provenance) -> Result<Self> {
        let feature_dim = samples.first().map(|s| s.features.len()).unwrap_or(0);
        for (i, s) in samples.iter().enumerate() {
            if s.id != i {
                return Err(Error::Precondition(format!(
                    "sample at position {i} has id {}",
                    s.id
                )));
            }
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    id: s.id,
                    expected: feature_dim,
                    got: s.features.len(),
                });
            }
            if !s.features.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    layer: format!("features of sample {}", s.id),
                });
            }
            let label_ok = match (task, s.target) {
                (Task::Classification { classes }, Target::Class(c)) => c < classes,
                (Task::Regression, Target::Value(v)) => v.is_finite(),
                _ => false,
            };
            if !label_ok {
                return Err(Error::BadLabel {
                    id: s.id,
                    label: format!("{:?}", s.target),
                });
            }
        }
        Ok(Dataset {
            samples,
            feature_dim,
            task,
            provenance,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn classes(&self) -> Option<usize> {
        match self.task {
            Task::Classification { classes } => Some(classes),
            Task::Regression => None,
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Result<MiniBatch<'_>> {
        MiniBatch::from_slice(&self.samples)
    }

    /// Splits off the first `round(fraction * len)` samples as an evaluation
    /// set. Both parts are renumbered from zero, in original order.
    pub fn split_head(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::config("eval_fraction", "must be in [0, 1)"));
        }
        let n_eval = (fraction * self.len() as f64).round() as usize;
        let renumber = |part: &[Sample]| -> Vec<Sample> {
            part.iter()
                .enumerate()
                .map(|(i, s)| Sample::new(i, s.features.clone(), s.target))
                .collect()
        };
        let eval = Dataset {
            samples: renumber(&self.samples[..n_eval]),
            feature_dim: self.feature_dim,
            task: self.task,
            provenance: Provenance::Derived(format!("head {n_eval} of {:?}", self.provenance)),
        };
        let train = Dataset {
            samples: renumber(&self.samples[n_eval..]),
            feature_dim: self.feature_dim,
            task: self.task,
            provenance: Provenance::Derived(format!(
                "tail {} of {:?}",
                self.len() - n_eval,
                self.provenance
            )),
        };
        Ok((eval, train))
    }

    /// Mean of the feature vectors (the quadratic offset mean).
    pub fn feature_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.feature_dim];
        for s in &self.samples {
            for (m, f) in mean.iter_mut().zip(&s.features) {
                *m += f;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Shuffled visiting order for one epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochPlan {
    pub permutation: Vec<usize>,
    pub batch_size: usize,
    pub epoch: usize,
}

impl EpochPlan {
    /// Permutation is a pure function of `(seed, epoch)`: ChaCha stream
    /// `epoch` of `seed`.
    pub fn new(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if batch_size > n {
            return Err(Error::config(
                "batch_size",
                format!("{batch_size} exceeds dataset size {n}"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch as u64);
        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.shuffle(&mut rng);
        Ok(EpochPlan {
            permutation,
            batch_size,
            epoch,
        })
    }

    pub fn batch_count(&self) -> usize {
        self.permutation.len().div_ceil(self.batch_size)
    }

    /// Batches in visiting order; the last one may be short.
    pub fn batches<'a>(&self, dataset: &'a Dataset) -> Result<Vec<MiniBatch<'a>>> {
        self.permutation
            .chunks(self.batch_size)
            .map(|ids| MiniBatch::new(ids.iter().map(|&i| &dataset.samples[i]).collect()))
            .collect()
    }
}

/// `⌈n/K⌉` shuffled batches covering every sample exactly once.
pub fn epoch_batches(
    dataset: &Dataset,
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<MiniBatch<'_>>> {
    EpochPlan::new(dataset.len(), batch_size, seed, epoch)?.batches(dataset)
}
