//! Discrete mean-field-game solver for the SIRC epidemic model.
//!
//! Four population groups (susceptible, infected, recovered, cross-immune)
//! are distributed over a self-isolation index `x ∈ [0, 1]`. Their densities
//! evolve under coupled Fokker-Planck equations whose advection is the
//! agents' strategy; the strategy is found by a forward-backward fixed-point
//! iteration against a discrete adjoint (HJB) system.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. File formats,
//! the CLI and reporting live in the `sirc-mfg` companion crate.
//!
//! Module map:
//!
//! * [`grid`], [`params`], [`field`], [`initial`], [`scenario`]: domain types,
//!   preset scenarios and initial-distribution synthesis.
//! * [`ode`]: the classical SIRC ODE baseline.
//! * [`tridiag`]: cached tridiagonal factorizations.
//! * [`fpk`]: forward Fokker-Planck time stepping.
//! * [`hjb`]: backward adjoint sweep.
//! * [`control`]: running cost, pointwise optimality and corrective control.
//! * [`cost`]: the discrete objective.
//! * [`solver`]: the fixed-point iteration.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod control;
pub mod cost;
pub mod error;
pub mod field;
pub mod fpk;
pub mod grid;
pub mod hjb;
pub mod initial;
pub mod ode;
pub mod params;
pub mod scenario;
pub mod solver;
pub mod tridiag;

pub use error::{Error, Result};
pub use field::{ControlField, DensityField, Layers, ValueField};
pub use grid::Grid;
pub use params::{EpidemicParams, GroupCosts, GroupId, MfgParams, PerGroup};
pub use scenario::{InitialCondition, InitialShape, Period, Scenario};
pub use solver::{solve, SolveReport, SolverOptions};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
