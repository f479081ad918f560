//! Simulation and analytic classification of a periodically forced pair of
//! firing-rate units with fast mutual excitation and slow delayed inhibition.
//!
//! The crate covers the tone stimulus ([`stimulus`]), the delay model
//! ([`model`]) and its RK4 integrator ([`integrator`]), the frozen-gate fast
//! subsystem ([`fast_subsystem`]), existence tables for periodic states
//! ([`classifier`]), closed-form percept boundaries ([`boundaries`]) and
//! parallel `(PR, df)` sweeps ([`sweep`]).

// Parameter checks are written as `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundaries;
pub mod cli;
pub mod classifier;
pub mod error;
pub mod fast_subsystem;
pub mod integrator;
pub mod model;
pub mod stimulus;
pub mod svg;
pub mod sweep;

pub use error::{Error, Result};
