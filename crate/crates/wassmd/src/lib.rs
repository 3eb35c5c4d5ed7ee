//! # wassmd
//!
//! p-Wasserstein distances, exchangeable-pair certificates and
//! moderate-deviation bound shapes for normal approximation experiments.
//!
//! The crate is organized around one workflow: build a standardized
//! statistic W from the model zoo ([`models`]), measure how far it is from
//! Gaussian — exactly on small instances ([`oracles`]), empirically via
//! transport distances ([`wasserstein`]) or tail estimation
//! ([`montecarlo`]) — and compare against closed-form bound shapes with
//! their range conditions ([`bounds`]). Special functions and summand
//! distributions live in [`special`] and [`dist`].
//!
//! Everything is deterministic given a seed: replications draw from
//! counter-split ChaCha streams, so results are independent of thread
//! count.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod oracles;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod wasserstein;

pub use error::{Error, Result};
