//! Planning core for fixed and mobile EV charging networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`netcore`]: road network, continuous network points, shortest-path
//!   distances and O-D pair coverage.
//! * [`candgen`]: edge scanning that turns the continuous location problem
//!   into a finite candidate set with its coverage matrix.
//! * [`equity`]: Best-Worst Method factor weights and zone / O-D equity
//!   weights.
//! * [`scenario`]: periods, demand scenarios and seeded flow generation.
//! * [`milp`]: model representation, a dense bounded simplex with
//!   branch-and-bound, and CPLEX LP text import/export.
//! * [`planner`]: the fixed-station placement model, the mobile-station
//!   scheduling model, and KPI reporting.
//!
//! Everything here is `no_std` + `alloc`. The `std` feature (on by default)
//! only adds wall-clock time limits to the MILP solver.
#![cfg_attr(not(feature = "std"), no_std)]
// index loops mirror the model notation
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod candgen;
pub mod equity;
pub mod milp;
pub mod netcore;
pub mod planner;
pub mod scenario;

/// Geometric tolerance (miles) for all distance comparisons.
pub const TAU: f64 = 1e-9;
