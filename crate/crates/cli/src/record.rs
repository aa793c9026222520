use serde::{Deserialize, Serialize};

use sbdc_core::dynamics::TrajectorySummary;
use sbdc_core::robustness::RobustnessReport;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to trace one invocation back to its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub scenario_hash: String,
    pub toolkit_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub report: Option<RobustnessReport>,
    pub simulation: Option<SimulationRecord>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub mode: String,
    pub samples: usize,
    pub final_time: f64,
    pub summary: TrajectorySummary,
    pub csv: String,
}
