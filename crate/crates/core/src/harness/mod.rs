//! Declarative experiments: configuration, two-phase runs, metrics,
//! statistics, plots and the golden trace.

pub mod config;
pub mod frequency;
pub mod golden;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod run;
pub mod stats;
pub mod summary;

pub use config::{Algorithm, ArmConfig, ExperimentConfig};
pub use golden::{golden_trace, GoldenReport};
pub use metrics::MetricsRecord;
pub use output::{emit_outputs, report};
pub use run::{run_experiment, ExperimentRun};
pub use stats::{welch_t_test, WelchResult};
pub use summary::{summarize, RunSummary};
