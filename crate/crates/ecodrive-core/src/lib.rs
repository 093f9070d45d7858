//! Deceleration advice for heavy trucks built on switching among a finite set
//! of driving modes (cruising, eco-roll, coasting, engine brake).
//!
//! The crate is organized around the pipeline an advice system runs through:
//!
//! * [`truck`] — vehicle, driveline and engine-map parameters,
//! * [`dynamics`] — per-mode longitudinal dynamics in the distance domain,
//! * [`solver`] — backward Hamiltonian-minimizing sweep plus the bisection
//!   search for the terminal co-state,
//! * [`dp`] — brute-force value-iteration reference used to validate solver
//!   optimality on small instances,
//! * [`route`] / [`cycle`] — road scenarios, drive cycles and the extraction
//!   of deceleration sections that can be advised,
//! * [`sim`] — forward simulator, the advice-dispatching state machine and
//!   the baseline (no-advice) driver used for fuel/time comparisons.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! front end live in the companion `ecodrive-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cycle;
pub mod dp;
pub mod dynamics;
pub mod modes;
pub mod route;
pub mod sim;
pub mod solver;
pub mod truck;

pub use dynamics::ModelError;
pub use modes::DrivingMode;
pub use solver::{CostWeights, SegmentProblem, SolveResult, SolverOptions};
pub use truck::{EngineEnvelope, TruckConfig};
