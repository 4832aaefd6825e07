//! Simulation and control library for two non-holonomic mobile
//! manipulators cooperatively transporting a rigid rod along planned
//! end-effector trajectories.
//!
//! The pipeline: a probabilistic roadmap plans the rod path and derives
//! one end-effector trajectory per robot ([`planner`]); a
//! proportional-navigation tracker ([`guidance`]) or a velocity-sampling
//! tracker ([`sampling`]) drives each differential-drive base
//! ([`diff_drive`]) between projected waypoints under the stop-and-sync
//! coordinator ([`sync`]); the leader arm solves position IK against its
//! projected trajectory point and the follower arm solves IK constrained
//! to keep the rod length ([`arm`]). An SLQ-MPC baseline over the
//! combined base+arm model ([`mpc`]) tracks the same references without
//! the coupling. Runs are logged to CSV and summarized ([`logging`],
//! [`scenario`]).

// Validation uses `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm;
pub mod config;
pub mod diff_drive;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod logging;
pub mod mpc;
pub mod planner;
pub mod sampling;
pub mod scenario;
pub mod sync;
pub mod world;

pub use error::Error;
