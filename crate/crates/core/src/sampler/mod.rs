//! Turns per-sample loss-difference history into selection probabilities
//! for each mini-batch and draws the subset that drives the SAM passes.
//!
//! Scores are min-max normalized into `[s_min, s_max(epoch)]`, where the
//! upper bound ramps linearly from `s_min` to `s_max` over the first
//! `e_start` epochs, and then divided by their sum. Normalization caps the
//! ratio between the most and least likely sample at `s_max / s_min`.

mod adlp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adlp::{AdlpEntry, AdlpTable, ADLP_RECORD_LEN};

use crate::error::{Error, Result};
use crate::model::MiniBatch;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Fraction of each batch that is kept, in `(0, 1]`.
    pub alpha: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Warm-up horizon in epochs.
    pub e_start: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            alpha: 0.5,
            s_min: 0.1,
            s_max: 0.5,
            e_start: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("sampler.alpha", "must be in (0, 1]"));
        }
        if !(self.s_min > 0.0 && self.s_min.is_finite()) {
            return Err(Error::config("sampler.s_min", "must be finite and > 0"));
        }
        if !(self.s_max >= self.s_min && self.s_max.is_finite()) {
            return Err(Error::config("sampler.s_max", "must be finite and >= s_min"));
        }
        if self.e_start == 0 {
            return Err(Error::config("sampler.e_start", "must be at least 1"));
        }
        Ok(())
    }

    /// Upper normalization bound at `epoch` (0-based).
    pub fn effective_smax(&self, epoch: usize) -> f64 {
        if epoch >= self.e_start {
            return self.s_max;
        }
        let ramp = epoch as f64 / self.e_start as f64;
        self.s_min + (self.s_max - self.s_min) * ramp
    }
}

/// `⌈αK⌉`, never below one. A small guard absorbs products such as
/// `0.7 * 10 = 7.000000000000001`.
pub fn subset_size(alpha: f64, batch_len: usize) -> usize {
    let raw = alpha * batch_len as f64;
    ((raw - 1e-9).ceil() as usize).clamp(1, batch_len)
}

/// Min-max normalization into `[lo, hi]`. A constant input maps to `lo`.
pub fn normalize_scores(raw: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return vec![lo; raw.len()];
    }
    raw.iter()
        .map(|&g| lo + (g - min) * (hi - lo) / (max - min))
        .collect()
}

/// Scores and probabilities for one batch, in batch order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ScoreVector {
    /// Probabilities proportional to `normalized`.
    pub fn from_normalized(raw: Vec<f64>, normalized: Vec<f64>) -> Self {
        let total: f64 = normalized.iter().sum();
        let probabilities = normalized.iter().map(|g| g / total).collect();
        ScoreVector {
            raw,
            normalized,
            probabilities,
        }
    }

    pub fn uniform(len: usize) -> Self {
        Self::from_normalized(vec![0.0; len], vec![1.0; len])
    }
}

pub fn batch_probabilities(
    table: &AdlpTable,
    batch: &MiniBatch<'_>,
    cfg: &SamplerConfig,
    epoch: usize,
) -> ScoreVector {
    let fallback = table.global_mean().unwrap_or(0.0);
    let raw: Vec<f64> = batch
        .samples()
        .iter()
        .map(|s| table.get(s.id).map_or(fallback, |e| e.mean))
        .collect();
    let normalized = normalize_scores(&raw, cfg.s_min, cfg.effective_smax(epoch));
    ScoreVector::from_normalized(raw, normalized)
}

/// Weighted sampling without replacement by exponential keys: each position
/// draws `u ~ U(0, 1]` and gets key `−ln(u) / p`; the `n` smallest keys win.
/// Returns positions in draw order (smallest key first). Zero-probability
/// positions are drawn last.
pub fn sample_subset<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let k = probs.len();
    if n > k {
        return Err(Error::SubsetTooLarge {
            requested: n,
            available: k,
        });
    }
    if n == k {
        return Ok((0..k).collect());
    }
    let mut keys: Vec<(f64, usize)> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let u = 1.0 - rng.random::<f64>();
            let key = if p > 0.0 { -u.ln() / p } else { f64::INFINITY };
            (key, i)
        })
        .collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keys[..n].iter().map(|&(_, i)| i).collect())
}

/// Probability that each position ends up in a draw of size `n`. Exact for
/// `n = K` and for uniform probabilities; otherwise a Monte Carlo estimate
/// over `draws` repetitions.
pub fn inclusion_probabilities<R: Rng + ?Sized>(
    probs: &[f64],
    n: usize,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k = probs.len();
    if n >= k {
        return Ok(vec![1.0; k]);
    }
    if probs.windows(2).all(|w| w[0] == w[1]) {
        return Ok(vec![n as f64 / k as f64; k]);
    }
    let mut hits = vec![0u64; k];
    for _ in 0..draws {
        for i in sample_subset(probs, n, rng)? {
            hits[i] += 1;
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / draws as f64).collect())
}

/// How the sampler scores a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Loss-difference history (AUSAM).
    Adlp,
    /// Uniform probabilities ("SAM + random").
    Uniform,
}

/// Per-run sampling state: the score table plus a dedicated RNG stream.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub config: SamplerConfig,
    pub strategy: Strategy,
    pub table: AdlpTable,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(config: SamplerConfig, strategy: Strategy) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Sampler {
            config,
            strategy,
            table: AdlpTable::new(),
            rng,
        })
    }

    pub fn probabilities(&self, batch: &MiniBatch<'_>, epoch: usize) -> ScoreVector {
        match self.strategy {
            Strategy::Adlp => batch_probabilities(&self.table, batch, &self.config, epoch),
            Strategy::Uniform => ScoreVector::uniform(batch.len()),
        }
    }

    /// Draws `⌈αK⌉` positions, returned in batch order.
    pub fn select(&mut self, scores: &ScoreVector) -> Result<Vec<usize>> {
        let n = subset_size(self.config.alpha, scores.probabilities.len());
        let mut picked = sample_subset(&scores.probabilities, n, &mut self.rng)?;
        picked.sort_unstable();
        Ok(picked)
    }
}
