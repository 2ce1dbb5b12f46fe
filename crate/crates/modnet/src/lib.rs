//! File formats, rendering, sweeps and the command line for `modnet-core`.
//!
//! Every artifact written here (checkpoints, traces, partitions, CSV tables,
//! drawings) records the config hash and seed that produced it and the
//! content hash of its parent, so a stale or mismatched input is rejected
//! instead of silently combined.
#![warn(missing_debug_implementations, rust_2018_idioms)]

pub mod artifact;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod partition_file;
pub mod pipeline;
pub mod render;
pub mod tables;

pub use error::{Error, Result};
pub use modnet_core as core;
