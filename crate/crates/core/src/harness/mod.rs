//! Configured training runs, comparisons, verification suites and metric
//! export: everything the `ausam` binary does, as library calls.

mod compare;
pub mod config;
mod export;
mod suites;
mod train;

pub use compare::{compare, run_in_memory, CompareReport, CompareRow};
pub use config::{DatasetSpec, Method, ModelSpec, OptimizerSection, RunConfig, SamplerSection};
pub use export::export_series;
pub use suites::{all_hold, run_suites, SuiteSummary};
pub use train::{
    output_dir, train, EpochRecord, EvalStats, RunSummary, TrainRecord, Trainer, ADLP_FILE,
    CHECKPOINT_FILE, EPOCHS_FILE, METRICS_FILE, SUMMARY_FILE,
};

use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

/// Bad input (config, data files, arguments) is a validation error;
/// anything that goes wrong once computation has started is a runtime one.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig { .. }
        | Error::Parse { .. }
        | Error::Format { .. }
        | Error::BadLabel { .. }
        | Error::DimensionMismatch { .. }
        | Error::DuplicateId(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}
