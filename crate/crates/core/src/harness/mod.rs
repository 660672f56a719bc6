//! Experiment grids over channel conditions, seeded trial batches and CSV
//! output.

pub mod config;
pub mod experiment;
pub mod stats;

pub use config::{BerSweep, ConfigFile, ExperimentConfig, GridPoint, LossPoint, Sweep};
pub use experiment::{
    analytic_lambda, run_experiment, CsvRow, ExperimentResult, GainRow, PointResult, SchemeRun,
    CSV_HEADER,
};
pub use stats::{gain, Summary};
