use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Method, RunConfig};
use super::train::{train, RunSummary, Trainer};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub method: Method,
    pub alpha: Option<f64>,
    pub final_eval_accuracy: Option<f64>,
    pub final_eval_loss: Option<f64>,
    pub steps: u64,
    /// Forward plus backward per-sample evaluations over the run.
    pub evaluations: u64,
    /// SAM's evaluations divided by this run's, when a SAM run is present.
    pub ratio_vs_sam: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:>9} {:>10} {:>14} {:>9} {:>9}\n",
            "run", "accuracy", "eval loss", "evaluations", "vs SAM", "wall s"
        );
        let opt = |v: Option<f64>, scale: f64, prec: usize| {
            v.map_or("-".to_string(), |x| format!("{:.*}", prec, x * scale))
        };
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:>9} {:>10} {:>14} {:>9} {:>9.2}\n",
                r.label,
                opt(r.final_eval_accuracy, 100.0, 2),
                opt(r.final_eval_loss, 1.0, 4),
                r.evaluations,
                opt(r.ratio_vs_sam, 1.0, 3),
                r.wall_time_s
            ));
        }
        out
    }
}

fn label(cfg: &RunConfig) -> String {
    match cfg.method {
        Method::Ausam | Method::SamRandom => format!("{}-{}", cfg.method.as_str(), cfg.sampler.alpha),
        m => m.as_str().to_string(),
    }
}

/// Configs must agree on dataset, model and seed; only the optimizer side
/// may differ.
fn check_comparable(configs: &[RunConfig]) -> Result<()> {
    if configs.len() < 2 {
        return Err(Error::config("compare", "needs at least two configs"));
    }
    let first = &configs[0];
    for (i, c) in configs.iter().enumerate().skip(1) {
        let field = if c.dataset != first.dataset {
            Some("dataset")
        } else if c.model != first.model {
            Some("model")
        } else if c.seed != first.seed {
            Some("seed")
        } else if c.eval_fraction != first.eval_fraction {
            Some("eval_fraction")
        } else {
            None
        };
        if let Some(f) = field {
            return Err(Error::config(f, format!("config {} differs from config 1", i + 1)));
        }
    }
    Ok(())
}

/// Runs every config (one thread each) and tabulates them. With `out`, each
/// run writes its files to `out/<index>-<label>/`.
pub fn compare(configs: &[RunConfig], out: Option<&Path>) -> Result<CompareReport> {
    check_comparable(configs)?;
    let summaries: Vec<Result<RunSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(i, cfg)| {
                scope.spawn(move || match out {
                    Some(dir) => train(cfg, &dir.join(format!("{}-{}", i + 1, label(cfg)))),
                    None => run_in_memory(cfg),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let summaries = summaries.into_iter().collect::<Result<Vec<_>>>()?;
    let sam_evals = configs
        .iter()
        .zip(&summaries)
        .find(|(c, _)| c.method == Method::Sam)
        .map(|(_, s)| s.total_evaluations());
    let rows = configs
        .iter()
        .zip(summaries)
        .map(|(cfg, s)| CompareRow {
            label: label(cfg),
            method: cfg.method,
            alpha: cfg.method.uses_sampler().then_some(cfg.sampler.alpha),
            final_eval_accuracy: s.final_eval_accuracy,
            final_eval_loss: s.final_eval_loss,
            steps: s.steps,
            evaluations: s.total_evaluations(),
            ratio_vs_sam: sam_evals
                .filter(|_| s.total_evaluations() > 0)
                .map(|e| e as f64 / s.total_evaluations() as f64),
            wall_time_s: s.wall_time_s,
        })
        .collect();
    Ok(CompareReport { rows })
}

/// Trains without touching the filesystem.
pub fn run_in_memory(cfg: &RunConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let mut t = Trainer::new(cfg)?;
    for _ in 0..cfg.epochs {
        t.run_epoch(|_| Ok(()))?;
    }
    Ok(t.summary(started.elapsed().as_secs_f64()))
}
