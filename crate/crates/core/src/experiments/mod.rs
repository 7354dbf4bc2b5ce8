//! Constructions and probes outside the main pipeline.

mod counterexample;
mod instability;
mod probe;
mod redundancy;
mod signals;

pub use counterexample::{
    counterexample_grid, counterexample_pair, open_unit_band, tensor_counterexample, Counterexample,
    CounterexampleChecks,
};
pub use instability::{single_band_instability, Instability, InstabilitySummary};
pub use probe::{stability_probe, ProbeLevel, ProbeReport, ProbeTrial};
pub use redundancy::{redundancy_report, Redundancy, RedundancyInput, CURVELET_DELTA};
pub use signals::random_signal;
