//! Dual-balance collaborative experts for imbalanced domain-incremental learning.
//!
//! The crate consumes fixed-space feature vectors organized as a stream of
//! domain tasks. For every task it trains a group of logit-adjusted MLP experts,
//! stores class Gaussian statistics, synthesizes a class-balanced pseudo-feature
//! set from everything stored so far and retrains a selector network that fuses
//! the whole expert pool. Baselines and an evaluation harness live alongside.

pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod numerics;
pub mod stats;

pub use error::{Error, Result};
