//! Experiment harness for the bias-free ReLU NTK model: configuration
//! parsing, seeded orchestration of the figure presets and sweeps, and the
//! canonical CSV emitters. The `ntklab` binary is a thin dispatcher over
//! these pieces.

pub mod config;
pub mod experiments;
pub mod pool;
pub mod records;
