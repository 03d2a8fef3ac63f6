//! Join-the-shortest-queue dispatch over dynamically resampled random graphs.
//!
//! The crate has two halves that share the [`model`] types:
//!
//! * a discrete-event simulator ([`engine`]) for `n` unit-rate single-server
//!   queues, where each arrival joins the shortest queue in the closed
//!   out-neighborhood of a uniformly chosen server on a graph drawn from a
//!   [`graphs::GraphLaw`] and redrawn according to a
//!   [`resampling::ResamplingSchedule`];
//! * numerics for the large-`n` limit: the fluid ODE system and its
//!   integrator ([`fluid`]), the equilibrium occupancy and its bounds, plus a
//!   small exact CTMC used as an oracle ([`equilibrium`]).
//!
//! The crate is `no_std` and only needs `alloc`. All randomness flows
//! through [`rng`], which splits one 64-bit seed into independent
//! counter-based streams.

#![no_std]

extern crate alloc;

pub mod engine;
pub mod equilibrium;
mod error;
pub mod fluid;
pub mod graphs;
pub mod model;
pub mod resampling;
pub mod rng;

pub use error::{Error, Result};
pub use model::{DegreeDistribution, GraphSnapshot, OccupancyState, QueueVector};
