//! Experiment driver around the `bipstls` library: TOML-configured sweeps,
//! deterministic JSON reports with content hashes, CSV tables, and tidy
//! plot-data extraction. All randomness flows from the single config seed
//! through fixed per-trial derivations, so a report is byte-identical across
//! runs and thread counts (the runtime block is excluded from the hash).

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod plotdata;
pub mod report;
pub mod runner;
