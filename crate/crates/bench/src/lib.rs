//! Experiment drivers, result tables and plotting for the spike-train
//! recovery benchmarks.

pub mod plot;
pub mod runner;
pub mod spec;
pub mod table;
