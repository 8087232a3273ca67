//! Stochastic imitation dynamics on potential population games.
//!
//! The crate simulates the continuous-time Markov chain in which each
//! individual, on the ring of its own Poisson clock, contacts a neighbor and
//! copies the neighbor's action with a probability that depends on the reward
//! gap. Alongside the exact simulators it provides the mean-field ODE, a
//! classifier for the critical points of the game's potential, and the
//! long-run metrics (absorption time, time spent near stable equilibria,
//! exit times from unstable ones).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod game;
pub mod landscape;
pub mod meanfield;
pub mod metrics;
pub mod rng;
pub mod rules;
pub mod simplex;
pub mod topology;
pub mod trajectory;

pub use error::{Error, Result};
