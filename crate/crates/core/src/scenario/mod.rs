//! The four studies.

pub mod adhoc;
pub mod cellfree;
pub mod coverage;
pub mod iab;

use crate::harness::ResultTable;

/// Tables produced by one scenario run. `extras` are written next to the main
/// CSV as `<stem>_<suffix>.csv`.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub main: ResultTable,
    pub extras: Vec<(String, ResultTable)>,
    pub failed_trials: usize,
}
