//! Sharpness-aware minimization with loss-difference driven subsampling.
//!
//! The crate is organised around a few layers:
//!
//! - [`model`]: logistic regression, a small ReLU MLP and quadratic
//!   objectives, with per-sample losses and hand-written backward passes.
//! - [`optim`]: SGD, SAM and the subsampled SAM step (AUSAM).
//! - [`sampler`]: per-sample loss-difference history and the weighted
//!   subset draw.
//! - [`data`]: synthetic generators, CSV and IDX loaders, epoch batching.
//! - [`verify`]: brute-force numerical checks of the bounds that justify
//!   the sampling rule.
//! - [`harness`]: configuration, training runs, comparisons and metric
//!   export, as used by the `ausam` binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod optim;
pub mod sampler;
pub mod verify;

mod vecops;

pub use error::{Error, Result};
