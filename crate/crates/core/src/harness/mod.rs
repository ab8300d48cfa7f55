//! Experiment harness: schemes and baselines, run orchestration with
//! on-disk artifacts, statistics, and the self-check battery.

pub mod audit;
pub mod metrics;
pub mod run;
pub mod scheme;
