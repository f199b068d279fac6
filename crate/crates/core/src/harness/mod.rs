//! Experiment orchestration: config files, metrics logs, single runs,
//! parameter sweeps and runtime validation.

pub mod config_file;
pub mod experiment;
pub mod metrics;
pub mod sweep;
pub mod validate;

pub use config_file::{load, resolve, FileConfig, Resolved};
pub use experiment::{run_experiment, run_experiment_with, RunArtifacts, Summary};
pub use sweep::{run_sweep, SweepAxis, SweepPoint};
pub use validate::{run_all as run_validation, CheckResult};
