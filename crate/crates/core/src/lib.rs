//! Simulation laboratory for 3-majority opinion dynamics on a complete
//! anonymous network, with static and dynamic Byzantine adversaries.
//!
//! The crate is organized around five pieces:
//!
//! - [`dynamics`] — the exact one-round law and two sampling engines, plus a
//!   brute-force oracle used to validate the closed form.
//! - [`adversary`] — budgeted opinion-corruption strategies applied after
//!   each round's update.
//! - [`observer`] — every analytical quantity tracked over a trajectory:
//!   valid/small/big sets, thresholds, phases, stopping times, terminal
//!   classification.
//! - [`drift`] — empirical machinery for hitting-time and drift claims,
//!   with an exact birth-death-chain oracle.
//! - [`harness`] — experiment configuration, deterministic seeding, sweep
//!   execution, and CSV/JSON result emission.
//!
//! The `trimaj` binary exposes all of it on the command line.

pub mod adversary;
pub mod drift;
pub mod dynamics;
pub mod harness;
pub mod observer;
pub mod opinion;
pub mod rng;
pub mod trace;

pub use opinion::{Configuration, NodeAssignment, OpinionId};
pub use rng::{seed_for, SimRng};
