//! Inventory control with random, crossing replenishment lead times.
//!
//! The central object is the generalized base-stock (GBS) policy, which
//! sets a target for in-transit inventory that moves with the current net
//! inventory level, `X = X* - gamma (Y - x*)`. With `gamma = 1` it is the
//! classical constant base-stock (CBS) policy.
//!
//! - [`rngdist`]: reproducible random streams, lead-time laws, normal quantile
//! - [`model`]: parameters, event calendar, newsvendor parameter choices
//! - [`policy`]: GBS decisions and event handling
//! - [`sim`]: discrete-event simulator and replication aggregation
//! - [`mdp`]: truncated average-cost MDP benchmark and LP export
//! - [`analysis`]: exact oracles, gamma search and scaling fits
//! - [`cli`]: command-line front end

pub mod analysis;
pub mod cli;
pub mod error;
pub mod mdp;
pub mod model;
pub mod policy;
pub mod rngdist;
pub mod sim;

pub use error::{Error, Result};
