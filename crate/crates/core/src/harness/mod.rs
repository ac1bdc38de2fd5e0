//! Monte Carlo engine: scenario files, per-packet trials, parallel SNR sweeps
//! and CSV output.
//!
//! Every trial draws from substreams keyed by the master seed and the trial index,
//! and per-point totals are integer sums, so serial and parallel runs agree
//! exactly.

mod config;
mod sweep;
mod training;
mod trial;

pub use config::{
    load_config, parse_config, parse_snr_list, serialize_config, DetectorChoice, EstimatorChoice, ScenarioSpec,
};
pub use sweep::{binomial_ci, run_sweep, run_sweep_with, scenario_hash, write_csv, Execution, SweepPoint, SweepResult};
pub use training::{training_curve, FilterTrainer, TrainingCurve, TrainingSpec};
pub use trial::{run_trial, Simulation, TrialCounts};
