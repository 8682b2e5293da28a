//! Mission orchestration: hop planning, propellant and battery accounting,
//! localization, coverage mapping, robot loss and reporting.

mod budget;
pub mod coverage;
pub mod events;
mod mission;
pub mod scenario;

use thiserror::Error;

use crate::hopplan::HopError;
use crate::navloc::{NavError, RobotId};
use crate::propulsion::PropulsionError;
use crate::terrain::TerrainError;

pub use budget::{budget_report, BudgetReport, BudgetRow};
pub use coverage::{scan, visible_stations, CoverageMap};
pub use events::{Event, EventKind, EventLog};
pub use mission::{
    run, trajectory_csv, MissionOutput, MissionReport, MissionStatus, RobotMode, RobotState,
    RobotSummary, Simulation, TrajectoryRow, TRAJECTORY_CSV_HEADER,
};
pub use scenario::{
    BodySetting, Loss, Operations, ProfileSetting, ResolvedScenario, RobotSpec, Scenario, Toggles,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("robot {0} is not part of the mission")]
    UnknownRobot(RobotId),
    #[error("the mission has already finished")]
    Finished,
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Hop(#[from] HopError),
    #[error(transparent)]
    Propulsion(#[from] PropulsionError),
    #[error(transparent)]
    Nav(#[from] NavError),
}

impl SimError {
    /// Whether the error comes from the scenario rather than the run.
    pub fn is_config(&self) -> bool {
        !matches!(self, SimError::Finished)
    }
}
