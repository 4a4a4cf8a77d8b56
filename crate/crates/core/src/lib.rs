//! Simulation toolkit for PAC learning through statistical queries, local
//! differential privacy and per-sample communication limits.
//!
//! The crate is organised around a small number of layers:
//!
//! * [`domain`]: points in the unit ball, finite distributions, target
//!   functions and seeded sampling.
//! * [`sq`]: statistical queries, their label split, oracles and the
//!   interactivity transcript every adaptivity claim is checked against.
//! * [`ldp`] and [`comm`]: local randomizers, budget ledgers and the
//!   compilers that answer statistical queries from randomized samples.
//! * [`margin`]: the label-non-adaptive large-margin halfspace learner.
//! * [`baselines`]: an interactive decision-list learner for comparison.
//! * [`lowerbound`]: a dense simplex solver, adversarial distribution search
//!   and the negation-fooling demonstration.
//! * [`experiment`]: configuration, artifact emission and the CLI commands.

pub mod baselines;
pub mod comm;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod ldp;
pub mod lowerbound;
pub mod margin;
pub mod seed;
pub mod sq;

pub use error::{Error, Result};
