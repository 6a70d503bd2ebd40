//! Target-network update rules for deep reinforcement learning.
//!
//! The crate implements the hard, soft, T-soft, adaptive T-soft (AT-soft) and
//! consolidated adaptive T-soft (CAT-soft) update rules over partitioned
//! parameter vectors ([`updates`]), a synthetic noisy-stream benchmark that
//! compares them without any RL machinery ([`synth`]), a small MLP with
//! manual backpropagation ([`nn`]) and a desk-scale actor-critic trainer
//! that uses the rules for both the value and policy target networks
//! ([`rl`]). The [`cli`] module wires everything to the `catsoft` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod synth;
pub mod updates;

pub use error::{Error, Result};
pub use updates::{
    AtSoftConfig, AtSoftState, ParamSubset, TSoftState, TargetTracker, UpdateReport, UpdateRule,
};
