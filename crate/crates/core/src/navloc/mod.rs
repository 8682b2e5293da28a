//! Relative localization of a hopping formation: simulated laser and stereo
//! measurements, two-anchor trilateration with covariance propagation, the
//! leg-by-leg formation protocol and a Monte Carlo error-growth harness.

mod estimate;
pub mod formation;
pub mod montecarlo;
pub mod sensors;
pub mod trilateration;

use thiserror::Error;

use crate::terrain::TerrainError;

pub use estimate::PoseEstimate;
pub use formation::{
    advance_formation, initial_formation, ChainEstimate, FixChannel, FixKind, FormationGeometry,
    FormationState, GeometryWarning, LaserFixMode, LegOutcome, LocalizationConfig, Phase, RobotId,
    SENSOR_HEIGHT_M,
};
pub use montecarlo::{
    loglog_slope, run_localization_mc, run_localization_mc_with_traces, traces_csv, Checkpoint,
    ErrorStats, McParams, TraceRow, CALIBRATION_NOTE, TRACE_CSV_HEADER, ZERO_ERROR_FLOOR_M,
};
pub use sensors::{
    measure_laser, measure_stereo, MeasureError, Measurement, MeasurementKind, NoiseToggles,
    SensorSpec,
};
pub use trilateration::{trilaterate, FixQuality, RangeObservation, Side, Trilateration};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("invalid localization input: {0}")]
    InvalidInput(String),
    #[error("robot {0} is not part of the formation")]
    UnknownRobot(RobotId),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
}
