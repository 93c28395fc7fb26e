//! Experiment orchestration: configs, checkpoints, sweeps, method
//! comparisons, CSV reports, and run manifests.

pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod manifest;
pub mod report;
pub mod sweep;
