//! Benchmark harness, configuration and CSV persistence on top of
//! [`robust_bo_core`].

pub mod classify;
pub mod config;
pub mod harness;
pub mod output;

pub use robust_bo_core as core;
