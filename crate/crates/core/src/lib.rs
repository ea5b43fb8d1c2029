//! Explicit-state safety model checking for Android permission models.
//!
//! [`kernel`] explores any finite [`kernel::TransitionSystem`] breadth-first
//! and returns shortest counterexample traces. [`models`] holds the built-in
//! systems, [`scenario`] parses the files that select and parameterize them,
//! and [`report`] renders and replays results.

pub mod cli;
pub mod kernel;
pub mod models;
pub mod report;
pub mod scenario;
