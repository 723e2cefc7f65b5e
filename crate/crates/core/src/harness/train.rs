use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Method, RunConfig};
use crate::data::{Dataset, EpochPlan};
use crate::error::{Error, Result};
use crate::model::{write_checkpoint, Model, ParamVector};
use crate::optim::{
    ausam_step, sam_step, sgd_step, OptimizerConfig, OptimizerState, StepRecord,
};
use crate::sampler::{AdlpTable, Sampler, Strategy};
use crate::verify::Checkpoint;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const EPOCHS_FILE: &str = "epochs.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const ADLP_FILE: &str = "adlp.bin";
pub const SUMMARY_FILE: &str = "summary.json";

/// One line of `metrics.jsonl` after the header. Sample counters are
/// cumulative over the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub record: String,
    pub step: u64,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub grad_norm: f64,
    pub perturbed_grad_norm: Option<f64>,
    pub batch_size: usize,
    /// Forward evaluations spent by this step alone.
    pub evaluated: usize,
    pub forward_samples: u64,
    pub backward_samples: u64,
    pub zero_gradient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_ids: Option<Vec<usize>>,
}

/// One line of `epochs.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub lr: f64,
    /// Mean of the step losses.
    pub train_loss: f64,
    pub eval_loss: Option<f64>,
    pub eval_accuracy: Option<f64>,
    pub forward_samples: u64,
    pub backward_samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub loss: f64,
    /// Fraction correct; absent for regression.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub model: String,
    pub epochs: usize,
    pub steps: u64,
    pub forward_samples: u64,
    pub backward_samples: u64,
    pub final_train_loss: Option<f64>,
    pub final_eval_loss: Option<f64>,
    pub final_eval_accuracy: Option<f64>,
    pub wall_time_s: f64,
}

impl RunSummary {
    /// Forward plus backward per-sample evaluations.
    pub fn total_evaluations(&self) -> u64 {
        self.forward_samples + self.backward_samples
    }
}

/// A training run held in memory, advanced one epoch at a time.
pub struct Trainer {
    config: RunConfig,
    model: Model,
    train: Arc<Dataset>,
    eval: Dataset,
    optimizer: OptimizerConfig,
    state: OptimizerState,
    sampler: Option<Sampler>,
    params: ParamVector,
    forward: u64,
    backward: u64,
    history: Vec<EpochRecord>,
}

impl Trainer {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let (model, data) = config.build()?;
        let (eval, train) = data.split_head(config.eval_fraction)?;
        if config.optimizer.batch_size > train.len() {
            return Err(Error::config(
                "optimizer.batch_size",
                format!("{} exceeds the {} training samples", config.optimizer.batch_size, train.len()),
            ));
        }
        let sampler = match config.method {
            Method::Ausam => Some(Sampler::new(config.sampler_config(), Strategy::Adlp)?),
            Method::SamRandom => Some(Sampler::new(config.sampler_config(), Strategy::Uniform)?),
            Method::Sgd | Method::Sam => None,
        };
        let params = model.init_params(config.seed);
        Ok(Trainer {
            config: config.clone(),
            optimizer: config.optimizer_config(),
            state: OptimizerState::new(params.len()),
            model,
            train: Arc::new(train),
            eval,
            sampler,
            params,
            forward: 0,
            backward: 0,
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn eval_set(&self) -> &Dataset {
        &self.eval
    }

    /// Loss-difference table, for the subsampling methods.
    pub fn table(&self) -> Option<&AdlpTable> {
        self.sampler.as_ref().map(|s| &s.table)
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn sample_counts(&self) -> (u64, u64) {
        (self.forward, self.backward)
    }

    /// Weights and score table as they stand before the next epoch.
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            epoch: self.epoch(),
            params: self.params.clone(),
            table: self.table().cloned().unwrap_or_default(),
        }
    }

    /// One optimizer step on `batch`, dispatched on the configured method.
    fn step(&mut self, batch: &crate::model::MiniBatch<'_>) -> Result<StepRecord> {
        let (model, w, cfg, state) = (&self.model, &mut self.params, &self.optimizer, &mut self.state);
        match (self.config.method, self.sampler.as_mut()) {
            (Method::Sgd, _) => sgd_step(model, w, batch, cfg, state),
            (Method::Sam, _) => sam_step(model, w, batch, cfg, state),
            (_, Some(sampler)) => ausam_step(model, w, batch, cfg, sampler, state),
            (_, None) => unreachable!("sampler exists for subsampling methods"),
        }
    }

    /// Runs one epoch. `on_step` sees every step record with cumulative
    /// counters; an error from it aborts the epoch.
    pub fn run_epoch(
        &mut self,
        mut on_step: impl FnMut(&TrainRecord) -> Result<()>,
    ) -> Result<EpochRecord> {
        let epoch = self.epoch();
        self.state.epoch = epoch;
        let plan = EpochPlan::new(self.train.len(), self.config.optimizer.batch_size, self.config.seed, epoch)?;
        // Batches borrow this handle, not `self`, so steps can mutate `self`.
        let train = Arc::clone(&self.train);
        let losses = {
            let mut losses = Vec::with_capacity(plan.batch_count());
            for batch in plan.batches(&train)? {
                let rec = self.step(&batch)?;
                self.forward += rec.forward_samples;
                self.backward += rec.backward_samples;
                losses.push(rec.train_loss);
                let row = TrainRecord {
                    record: "step".into(),
                    step: rec.step,
                    epoch: rec.epoch,
                    lr: rec.lr,
                    train_loss: rec.train_loss,
                    grad_norm: rec.grad_norm,
                    perturbed_grad_norm: rec.perturbed_grad_norm,
                    batch_size: rec.batch_size,
                    evaluated: rec.forward_samples as usize,
                    forward_samples: self.forward,
                    backward_samples: self.backward,
                    zero_gradient: rec.zero_gradient,
                    selected_ids: (self.config.record_selected_ids && self.sampler.is_some())
                        .then_some(rec.selected_ids),
                };
                if !rec.train_loss.is_finite() {
                    return Err(Error::NonFinite {
                        layer: "training loss".into(),
                    });
                }
                on_step(&row)?;
            }
            losses
        };

        let eval = self.evaluate(&self.eval)?;
        let record = EpochRecord {
            epoch,
            steps: losses.len(),
            lr: self.optimizer.lr_at(epoch),
            train_loss: losses.iter().sum::<f64>() / losses.len() as f64,
            eval_loss: eval.as_ref().map(|e| e.loss),
            eval_accuracy: eval.and_then(|e| e.accuracy),
            forward_samples: self.forward,
            backward_samples: self.backward,
        };
        self.history.push(record.clone());
        Ok(record)
    }

    /// Mean loss and accuracy of the current weights; `None` on an empty set.
    pub fn evaluate(&self, data: &Dataset) -> Result<Option<EvalStats>> {
        if data.is_empty() {
            return Ok(None);
        }
        let losses = self.model.per_sample_losses(&self.params, &data.as_batch()?)?;
        let loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let accuracy = match data.classes() {
            Some(_) => {
                let mut correct = 0usize;
                for s in data.samples() {
                    if self.model.predict(&self.params, s)? == s.target.class() {
                        correct += 1;
                    }
                }
                Some(correct as f64 / data.len() as f64)
            }
            None => None,
        };
        Ok(Some(EvalStats { loss, accuracy }))
    }

    pub fn summary(&self, wall_time_s: f64) -> RunSummary {
        let last = self.history.last();
        RunSummary {
            method: self.config.method,
            model: self.model.describe(),
            epochs: self.history.len(),
            steps: self.state.step,
            forward_samples: self.forward,
            backward_samples: self.backward,
            final_train_loss: last.map(|e| e.train_loss),
            final_eval_loss: last.and_then(|e| e.eval_loss),
            final_eval_accuracy: last.and_then(|e| e.eval_accuracy),
            wall_time_s,
        }
    }
}

#[derive(Serialize)]
struct Header<'a> {
    record: &'static str,
    method: Method,
    model: String,
    params: usize,
    train_samples: usize,
    eval_samples: usize,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    record: &'static str,
    epoch: usize,
    message: &'a str,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_line(out: &mut impl Write, path: &Path, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Where a run writes: `--out`, else the config's `output_dir`.
pub fn output_dir(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::config("output_dir", "no output directory given (set output_dir or pass --out)"))
}

/// Trains to completion and writes `metrics.jsonl`, `epochs.jsonl`,
/// `checkpoint.bin`, `adlp.bin` (subsampling methods) and `summary.json`
/// into `out`. Everything except the summary's wall time is a pure
/// function of the config.
pub fn train(config: &RunConfig, out: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    let mut trainer = Trainer::new(config)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let metrics_path = out.join(METRICS_FILE);
    let epochs_path = out.join(EPOCHS_FILE);
    let mut metrics = create(&metrics_path)?;
    let mut epochs = create(&epochs_path)?;
    // The output location is not part of the run's identity.
    let mut recorded = config.clone();
    recorded.output_dir = None;
    write_line(
        &mut metrics,
        &metrics_path,
        &Header {
            record: "header",
            method: config.method,
            model: trainer.model().describe(),
            params: trainer.params().len(),
            train_samples: trainer.train_set().len(),
            eval_samples: trainer.eval_set().len(),
            config: &recorded,
        },
    )?;

    for _ in 0..config.epochs {
        let epoch = trainer.epoch();
        let outcome = trainer.run_epoch(|row| write_line(&mut metrics, &metrics_path, row));
        match outcome {
            Ok(rec) => write_line(&mut epochs, &epochs_path, &rec)?,
            Err(e @ Error::NonFinite { .. }) => {
                write_line(
                    &mut metrics,
                    &metrics_path,
                    &Diagnostic {
                        record: "diagnostic",
                        epoch,
                        message: &e.to_string(),
                    },
                )?;
                metrics.flush().map_err(|err| Error::io(&metrics_path, err))?;
                return Err(e);
            }
            Err(e) => return Err(e),
        }
    }
    metrics.flush().map_err(|e| Error::io(&metrics_path, e))?;
    epochs.flush().map_err(|e| Error::io(&epochs_path, e))?;

    write_checkpoint(&out.join(CHECKPOINT_FILE), trainer.params())?;
    if let Some(table) = trainer.table() {
        table.save(&out.join(ADLP_FILE))?;
    }
    let summary = trainer.summary(started.elapsed().as_secs_f64());
    let summary_path = out.join(SUMMARY_FILE);
    let mut f = create(&summary_path)?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n").map_err(|e| Error::io(&summary_path, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::read_checkpoint;

    fn config(method: &str, epochs: usize) -> RunConfig {
        let text = format!(
            r#"
seed = 5
epochs = {epochs}
method = "{method}"
eval_fraction = 0.25
[dataset]
kind = "two-moons"
n = 80
[model]
kind = "mlp"
hidden = [8]
[optimizer]
batch_size = 16
"#
        );
        RunConfig::from_toml_str(&text, Path::new("run.toml")).unwrap()
    }

    #[test]
    fn counters_follow_the_step_law() {
        // 60 training samples, K = 16: batches 16, 16, 16, 12.
        for (method, per_epoch) in [("sgd", 60), ("sam", 120), ("ausam", 2 * (8 + 8 + 8 + 6))] {
            let mut t = Trainer::new(&config(method, 2)).unwrap();
            let mut last = 0;
            t.run_epoch(|r| {
                assert!(r.forward_samples >= last);
                last = r.forward_samples;
                Ok(())
            })
            .unwrap();
            assert_eq!(t.sample_counts(), (per_epoch, per_epoch), "{method}");
        }
    }

    #[test]
    fn zero_epochs_writes_header_and_initial_weights() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("ausam", 0);
        let summary = train(&cfg, dir.path()).unwrap();
        assert_eq!(summary.steps, 0);
        let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(metrics.lines().count(), 1);
        assert!(metrics.starts_with("{\"record\":\"header\""));
        let w = read_checkpoint(&dir.path().join(CHECKPOINT_FILE)).unwrap();
        let fresh = Trainer::new(&cfg).unwrap();
        assert_eq!(&w, fresh.params());
    }

    #[test]
    fn divergence_leaves_a_diagnostic() {
        let mut cfg = config("sgd", 3);
        cfg.optimizer.lr = 1e200;
        cfg.optimizer.momentum = 0.0;
        let dir = tempfile::tempdir().unwrap();
        let err = train(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
        let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        assert!(metrics.lines().last().unwrap().contains("\"record\":\"diagnostic\""));
    }

    #[test]
    fn batch_larger_than_training_set_rejected() {
        let mut cfg = config("sam", 1);
        cfg.optimizer.batch_size = 61;
        assert!(matches!(
            Trainer::new(&cfg),
            Err(Error::InvalidConfig { field, .. }) if field == "optimizer.batch_size"
        ));
    }
}
