//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//! epochs = 100
//! method = "ausam"          # sgd | sam | ausam | sam-random
//! eval_fraction = 0.2       # carved from the dataset head
//! output_dir = "runs/moons" # optional; `--out` overrides
//! record_selected_ids = false
//!
//! [dataset]
//! kind = "two-moons"        # two-moons | quadratic | csv | idx
//! n = 2000
//! noise = 0.2
//!
//! [model]
//! kind = "mlp"              # logistic | mlp | quadratic
//! hidden = [16, 16]
//!
//! [optimizer]
//! lr = 0.05
//! momentum = 0.9
//! weight_decay = 0.001
//! rho = 0.1
//! schedule = "cosine"       # constant | cosine | inverse-square
//! batch_size = 128
//!
//! [sampler]
//! alpha = 0.5
//! s_min = 0.1
//! s_max = 0.5
//! e_start = 10
//! ```
//!
//! Every section except `[dataset]` and `[model]` may be omitted, and
//! omitted keys take the defaults shown. Relative paths are resolved
//! against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, load_idx, make_quadratic_problem, make_two_moons, CsvSchema, Dataset,
    QuadraticSpec,
};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::optim::{OptimizerConfig, Schedule};
use crate::sampler::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sgd,
    Sam,
    Ausam,
    /// The subsampled step with uniform instead of score-driven selection.
    SamRandom,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Sam => "sam",
            Method::Ausam => "ausam",
            Method::SamRandom => "sam-random",
        }
    }

    pub fn uses_sampler(self) -> bool {
        matches!(self, Method::Ausam | Method::SamRandom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    TwoMoons {
        n: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    Quadratic {
        dim: usize,
        #[serde(default = "default_condition")]
        condition: f64,
        #[serde(default = "default_quadratic_n")]
        n: usize,
        #[serde(default = "default_offset_sd")]
        offset_sd: f64,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        /// Class names in label order; empty for regression targets.
        #[serde(default)]
        classes: Vec<String>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        limit: usize,
    },
}

fn default_noise() -> f64 {
    0.2
}
fn default_condition() -> f64 {
    10.0
}
fn default_quadratic_n() -> usize {
    64
}
fn default_offset_sd() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Logistic,
    Mlp { hidden: Vec<usize> },
    /// Only valid with a quadratic dataset, which defines the objective.
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub rho: f64,
    pub schedule: Schedule,
    pub batch_size: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let base = OptimizerConfig::default();
        OptimizerSection {
            lr: base.base_lr,
            momentum: base.momentum,
            weight_decay: base.weight_decay,
            rho: base.rho,
            schedule: base.schedule,
            batch_size: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub alpha: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub e_start: usize,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let base = SamplerConfig::default();
        SamplerSection {
            alpha: base.alpha,
            s_min: base.s_min,
            s_max: base.s_max,
            e_start: base.e_start,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub epochs: usize,
    pub method: Method,
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub record_selected_ids: bool,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub sampler: SamplerSection,
}

fn default_eval_fraction() -> f64 {
    0.2
}

impl RunConfig {
    /// Parses and validates. `base` resolves relative dataset paths.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })?;
        if let Some(dir) = origin.parent() {
            cfg.resolve_paths(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSpec::Csv { path, .. } => fix(path),
            DatasetSpec::Idx { images, labels, .. } => {
                fix(images);
                fix(labels);
            }
            _ => {}
        }
        if let Some(out) = &mut self.output_dir {
            fix(out);
        }
    }

    /// Field-level checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eval_fraction) {
            return Err(Error::config("eval_fraction", "must be in [0, 1)"));
        }
        match &self.dataset {
            DatasetSpec::TwoMoons { n, noise } => {
                if *n < 2 || n % 2 != 0 {
                    return Err(Error::config("dataset.n", "two-moons needs an even n >= 2"));
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(Error::config("dataset.noise", "must be finite and >= 0"));
                }
            }
            DatasetSpec::Quadratic { dim, condition, n, offset_sd } => {
                if *dim == 0 {
                    return Err(Error::config("dataset.dim", "must be at least 1"));
                }
                if !(*condition >= 1.0 && condition.is_finite()) {
                    return Err(Error::config("dataset.condition", "must be finite and >= 1"));
                }
                if *n == 0 {
                    return Err(Error::config("dataset.n", "must be at least 1"));
                }
                if !(*offset_sd >= 0.0 && offset_sd.is_finite()) {
                    return Err(Error::config("dataset.offset_sd", "must be finite and >= 0"));
                }
            }
            DatasetSpec::Csv { label_column, .. } => {
                if label_column.is_empty() {
                    return Err(Error::config("dataset.label_column", "must not be empty"));
                }
            }
            DatasetSpec::Idx { limit, .. } => {
                if *limit == 0 {
                    return Err(Error::config("dataset.limit", "must be at least 1"));
                }
            }
        }
        match (&self.model, &self.dataset) {
            (ModelSpec::Quadratic, DatasetSpec::Quadratic { .. }) => {}
            (ModelSpec::Quadratic, _) => {
                return Err(Error::config("model.kind", "quadratic needs a quadratic dataset"))
            }
            (_, DatasetSpec::Quadratic { .. }) => {
                return Err(Error::config("model.kind", "a quadratic dataset needs model kind quadratic"))
            }
            (ModelSpec::Mlp { hidden }, _) if hidden.contains(&0) => {
                return Err(Error::config("model.hidden", "layer widths must be >= 1"))
            }
            _ => {}
        }
        if self.optimizer.batch_size == 0 {
            return Err(Error::config("optimizer.batch_size", "must be at least 1"));
        }
        self.optimizer_config().validate(matches!(
            self.method,
            Method::Sam | Method::Ausam | Method::SamRandom
        ))?;
        if self.method.uses_sampler() {
            self.sampler_config().validate()?;
        }
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            base_lr: self.optimizer.lr,
            momentum: self.optimizer.momentum,
            weight_decay: self.optimizer.weight_decay,
            rho: self.optimizer.rho,
            total_epochs: self.epochs,
            schedule: self.optimizer.schedule,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            alpha: self.sampler.alpha,
            s_min: self.sampler.s_min,
            s_max: self.sampler.s_max,
            e_start: self.sampler.e_start,
            seed: self.sampler.seed.unwrap_or(self.seed),
        }
    }

    /// Loads or generates the dataset and builds the matching model.
    pub fn build(&self) -> Result<(Model, Dataset)> {
        let (model, data) = match &self.dataset {
            DatasetSpec::TwoMoons { n, noise } => {
                let ds = make_two_moons(*n, *noise, self.seed)?;
                (self.classifier(&ds)?, ds)
            }
            DatasetSpec::Quadratic { dim, condition, n, offset_sd } => {
                make_quadratic_problem(&QuadraticSpec {
                    dim: *dim,
                    condition: *condition,
                    samples: *n,
                    offset_sd: *offset_sd,
                    seed: self.seed,
                })?
            }
            DatasetSpec::Csv { path, label_column, classes } => {
                let ds = load_csv(
                    path,
                    &CsvSchema {
                        label_column: label_column.clone(),
                        classes: classes.clone(),
                    },
                )?;
                (self.classifier(&ds)?, ds)
            }
            DatasetSpec::Idx { images, labels, limit } => {
                let ds = load_idx(images, labels, *limit)?;
                (self.classifier(&ds)?, ds)
            }
        };
        Ok((model, data))
    }

    fn classifier(&self, ds: &Dataset) -> Result<Model> {
        let classes = ds
            .classes()
            .ok_or_else(|| Error::config("model.kind", "regression data needs a quadratic model"))?;
        match &self.model {
            ModelSpec::Logistic => Model::logistic(ds.feature_dim(), classes),
            ModelSpec::Mlp { hidden } => {
                let mut widths = vec![ds.feature_dim()];
                widths.extend(hidden);
                widths.push(classes);
                Model::mlp(widths)
            }
            ModelSpec::Quadratic => Err(Error::config("model.kind", "quadratic needs a quadratic dataset")),
        }
    }
}
