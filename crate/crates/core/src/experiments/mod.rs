//! End-to-end studies: tightness of the bound, exact bound verification,
//! stationarity of the flip chain, and planted-gerrymander detection.

mod bounds;
mod planted;
mod report;
mod stationarity;
mod tightness;

pub use bounds::{bound_verification, check_chain, random_reversible_chain, reference_chain, BoundConfig, ChainOutcome};
pub use planted::{planted_experiment, PlantedConfig, SeedOutcome};
pub use report::{labels_csv, write_labels_csv, Check, Comparison, ExperimentReport, Provenance, REPORT_FORMAT};
pub use stationarity::{run_instance, stationarity_experiment, InstanceOutcome, StationarityConfig, StationarityInstance};
pub use tightness::{cycle_minimum_hits, tightness_experiment, TightnessConfig, TightnessRow};

/// Experiment names understood by the command line.
pub const EXPERIMENTS: [&str; 4] = ["tightness", "bound-verify", "stationarity", "planted"];
