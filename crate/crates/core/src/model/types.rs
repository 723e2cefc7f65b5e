use std::collections::HashSet;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

/// Flat model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

/// Gradient with respect to a [`ParamVector`]; always the same length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradient(pub Vec<f64>);

macro_rules! flat_vector {
    ($t:ident) => {
        impl $t {
            pub fn zeros(len: usize) -> Self {
                $t(vec![0.0; len])
            }

            pub fn norm(&self) -> f64 {
                vecops::norm(&self.0)
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                $t(v)
            }
        }
    };
}

flat_vector!(ParamVector);
flat_vector!(Gradient);

impl ParamVector {
    /// `self + direction`, used to form perturbed weights.
    pub fn offset_by(&self, direction: &[f64]) -> ParamVector {
        ParamVector(self.0.iter().zip(direction).map(|(w, e)| w + e).collect())
    }
}

/// Supervision attached to a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    Value(f64),
}

impl Target {
    pub fn class(&self) -> Option<usize> {
        match *self {
            Target::Class(c) => Some(c),
            Target::Value(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Stable identity within a dataset; per-sample score history is keyed on it.
    pub id: usize,
    pub features: Vec<f64>,
    pub target: Target,
}

impl Sample {
    pub fn new(id: usize, features: Vec<f64>, target: Target) -> Self {
        Sample {
            id,
            features,
            target,
        }
    }
}

/// Ordered, duplicate-free view of samples.
#[derive(Clone, Debug)]
pub struct MiniBatch<'a> {
    samples: Vec<&'a Sample>,
}

impl<'a> MiniBatch<'a> {
    pub fn new(samples: Vec<&'a Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id) {
                return Err(Error::DuplicateId(s.id));
            }
        }
        Ok(MiniBatch { samples })
    }

    pub fn from_slice(samples: &'a [Sample]) -> Result<Self> {
        Self::new(samples.iter().collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[&'a Sample] {
        &self.samples
    }

    pub fn ids(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.id).collect()
    }

    /// Sub-batch made of the given positions, kept in batch order.
    pub fn select(&self, positions: &[usize]) -> Result<MiniBatch<'a>> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::Precondition("repeated batch position".into()));
        }
        let samples = sorted
            .iter()
            .map(|&p| {
                self.samples.get(p).copied().ok_or_else(|| {
                    Error::Precondition(format!("batch position {p} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MiniBatch::new(samples)
    }
}
