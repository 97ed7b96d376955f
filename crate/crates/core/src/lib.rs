//! Stepsized Newton methods measured in the local Hessian norm, with
//! linesearch and first-order baselines, test problems and a benchmark harness.

pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod problems;
pub mod schedules;
pub mod solvers;
