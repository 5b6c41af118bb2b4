//! Configuration, trial orchestration, statistics and CSV output.

pub mod config;
pub mod run;
pub mod stats;
pub mod table;
pub mod trials;

pub use run::{extra_path, run_scenario, write_output};
pub use config::{load_config, ScenarioId, SimConfig};
pub use stats::{empirical_cdf, wilson_interval, EmpiricalCdf};
pub use table::ResultTable;
pub use trials::{run_trials, Parallelism, Stream, TrialContext, TrialOutcomes};
