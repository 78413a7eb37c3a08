//! Config-driven experiments over the `beltrami-core` library.

pub mod config;
pub mod error;
pub mod record;
pub mod sweep;
pub mod tasks;

pub use config::{ExperimentConfig, Task};
pub use error::CliError;
pub use record::RunRecord;
pub use sweep::{run_sweep, SweepConfig};
pub use tasks::run;
