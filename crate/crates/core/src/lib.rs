//! Joint BS beamforming and RIS phase-shift design for multiuser MISO
//! downlinks.
//!
//! - [`env`]: system model, sum-rate objective, feasibility projections and
//!   the state/action encodings consumed by the learner.
//! - [`nn`]: dense networks with manual backpropagation, batch norm, Adam and
//!   input standardization.
//! - [`agent`]: the DDPG optimizer (actor/critic, replay, soft target updates,
//!   episode loop).
//! - [`bench`]: WMMSE, zero-forcing, alternating optimization, random-phase
//!   and brute-force baselines.
//! - [`harness`]: configs, seeding, sweeps, metrics, CSV output and the CLI.

pub mod agent;
pub mod bench;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;

pub use error::{Error, Result};
