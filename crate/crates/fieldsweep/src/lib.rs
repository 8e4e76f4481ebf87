//! Speed-controller synthesis for persistent patrol of a closed path.
//!
//! A robot (or a team of robots) moves along a fixed closed path while a
//! scalar field accumulates at a set of interest points. Wherever a robot's
//! sensor footprint covers a point, the field drains; elsewhere it grows.
//! This crate answers two questions about that loop:
//!
//! * does a speed profile exist that keeps the field bounded everywhere, and
//! * among such profiles, which one maximizes robustness or minimizes the
//!   worst steady-state peak?
//!
//! Both reduce to small linear programs over piecewise-constant reciprocal
//! speed profiles. The crate also evaluates the closed-form periodic steady
//! state of the field for a given profile and simulates the coupled
//! robot/field dynamics exactly (event-driven) or with fixed steps under
//! noise.
//!
//! Modules, bottom up:
//!
//! * [`task`] - paths, footprints, robot models, interest points.
//! * [`coverage`] - which path fractions cover a point; circular interval
//!   arithmetic.
//! * [`controller`] - reciprocal speed profiles on a rectangular basis;
//!   cycle/coverage times and stability margins.
//! * [`lp`] - a dense two-phase simplex used by synthesis.
//! * [`synthesis`] - constraint assembly and the feasibility / max-margin /
//!   min-peak / multi-robot programs.
//! * [`steady_state`] - closed-form periodic field profiles and their peaks.
//! * [`sim`] - event-exact and fixed-step simulation, noise and offset
//!   sweeps.
//! * [`formats`] - JSON scenario and controller files, CSV traces.
//! * [`commands`] - the operations behind the `fieldsweep` binary.

pub mod commands;
pub mod controller;
pub mod coverage;
pub mod formats;
pub mod geom;
pub mod lp;
pub mod sim;
pub mod steady_state;
pub mod synthesis;
pub mod task;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Task validation failed; each entry names one violated constraint.
    #[error("invalid task: {}", .0.join("; "))]
    InvalidTask(Vec<String>),
    /// A profile's coefficient count does not match its basis size.
    #[error("basis size mismatch: basis has {expected} cells, got {got} coefficients")]
    BasisMismatch { expected: usize, got: usize },
    /// An operation that needs coverage got an empty coverage set.
    #[error("point {point} is never covered by robot {robot}")]
    EmptyCoverage { robot: usize, point: usize },
    /// Steady-state analysis of a profile that lets the field diverge.
    /// `growth_per_cycle` is the worst per-cycle field increase.
    #[error("profile is not field-stabilizing: worst point grows {growth_per_cycle:.6} per cycle")]
    NotStabilizing { growth_per_cycle: f64 },
    /// Profiles that cannot be combined (different bases or kinds).
    #[error("incompatible profiles: {0}")]
    IncompatibleProfiles(String),
    /// Simulation configuration that the requested mode cannot honor.
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
    /// Malformed scenario or controller input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
