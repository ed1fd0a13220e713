//! Heat-bath algorithmic cooling of nuclear spins.
//!
//! Spin polarizations evolve under polarization-transfer gates, reversible
//! compression permutations and T1 thermalization. The crate tracks
//! per-spin biases (fast path for uncorrelated states) or the full
//! distribution over spin configurations, scores states by information
//! content and exact entropy, and grid-searches repolarization delays.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod schedule;

pub use error::{Error, Result};
pub use model::{BiasState, JointState, Molecule, SpinSpec, State};
pub use schedule::{Bindings, Delay, Mode, Schedule, Step, Trace};
