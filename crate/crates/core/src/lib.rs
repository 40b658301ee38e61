//! Slip-aware safe navigation and exploration on planar terrain.
//!
//! A robot drives over a field of slip ratios it can only observe by
//! driving. A Gaussian-process posterior over slip, combined with a
//! Lipschitz bound, certifies which cells are safe to enter; the robot
//! expands that certified set by choosing frontier subgoals that balance
//! progress toward the goal against the chance of certifying new terrain.

pub mod bitmap;
pub mod config;
pub mod error;
pub mod frontier;
pub mod gp;
pub mod grid;
pub mod nav;
pub mod presets;
pub mod render;
pub mod report;
pub mod safecert;
pub mod sim;
pub mod terrain;

pub use config::{derive_seed, ScenarioConfig};
pub use error::{Error, Result};
pub use frontier::StrategyKind;
pub use grid::{Cell, Grid, Mask, Point, ScalarGrid, WorkspaceSpec};
pub use sim::{run_batch, run_trial, Outcome, TrialMetrics, TrialReport};
pub use terrain::{generate_field, FieldKind, SlipField};
