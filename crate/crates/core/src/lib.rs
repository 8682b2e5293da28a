//! Simulation core for a small network of hopping lava-tube robots.
//!
//! The crate is organised bottom-up:
//!
//! - [`terrain`]: corridor geometry (floor, ceiling, slope, line of sight)
//! - [`propulsion`]: rocket-equation budgets, hover, battery, tank volume
//! - [`hopplan`]: fuel-minimal ballistic fly-hops under constant gravity
//! - [`navloc`]: triangular-formation localization and its Monte Carlo harness
//! - [`simcore`]: full missions, coverage mapping and reports

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod hopplan;
pub mod navloc;
pub mod propulsion;
pub mod simcore;
pub mod terrain;

pub use hopplan::{BodyConstants, CorridorPoint, HopPlan, PlannerConfig};
pub use nalgebra::{Matrix2, Vector2};
pub use navloc::{ErrorStats, Measurement, PoseEstimate, RobotId, SensorSpec};
pub use propulsion::{EngineSpec, MassBudget, PowerSpec, TechnologyPreset};
pub use simcore::{EventLog, MissionOutput, MissionReport, Scenario, SimError, Simulation};
pub use terrain::{ProfilePoint, Station, TubeProfile};
