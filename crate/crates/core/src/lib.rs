//! Sparse, spatially embedded policy networks for symbolic grid worlds.
//!
//! The crate covers the whole algorithmic pipeline and needs only `alloc`:
//!
//! - [`env`]: seeded symbolic environments (dynamic obstacles in 2D and 3D,
//!   go-to-key, and a small Pong).
//! - [`mlp`]: a feed-forward network whose neurons carry planar
//!   coordinates, with exact reverse-mode gradients.
//! - [`regularizer`]: the distance-weighted connection cost, its schedule,
//!   and greedy neuron relocation.
//! - [`ppo`]: rollouts, GAE, clipped-surrogate updates, magnitude pruning
//!   and the two-phase training loop.
//! - [`modules`]: structural and functional graphs, Louvain, internal
//!   Louvain, isolation, ARI and merge fine-tuning.
//! - [`intervention`]: pre-inference weight edits on detected modules and
//!   per-axis action statistics.
//!
//! File formats, rendering and the command line live in the `modnet` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod env;
mod error;
pub mod intervention;
pub mod mlp;
pub mod modules;
pub mod ppo;
pub mod regularizer;
pub mod rng;

pub use error::{Error, Result};
