//! Bucket-brigade formation: robots take turns hopping from the rear of a
//! zigzag of vertices to the next vertex past the front, then fix their
//! position against the robots that stayed put.
//!
//! Vertex `k` sits at `(origin + k·dx, ±w)` with the sign alternating, so
//! adjacent vertices are exactly `leg_length` apart and consecutive triples
//! form well-conditioned triangles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::estimate::oriented_cov;
use super::sensors::{measure_laser, measure_stereo, Measurement, NoiseToggles, SensorSpec};
use super::trilateration::{trilaterate, FixQuality, RangeObservation, Side};
use super::{NavError, PoseEstimate};
use crate::hopplan::CorridorPoint;
use crate::terrain::TubeProfile;

/// Height of the sensor head above the floor (ball radius), m.
pub const SENSOR_HEIGHT_M: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotId {
    A,
    B,
    C,
}

impl RobotId {
    pub const ALL: [RobotId; 3] = [RobotId::A, RobotId::B, RobotId::C];
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotId::A => "A",
            RobotId::B => "B",
            RobotId::C => "C",
        })
    }
}

impl FromStr for RobotId {
    type Err = NavError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(RobotId::A),
            "B" => Ok(RobotId::B),
            "C" => Ok(RobotId::C),
            _ => Err(NavError::InvalidInput(format!(
                "unknown robot `{s}` (expected A, B or C)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Planning,
    Airborne,
    GroundedMeasuring,
}

/// Which measurement channel may be used for fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixChannel {
    /// Laser when it is available, stereo otherwise.
    #[default]
    Auto,
    Laser,
    Stereo,
}

impl FromStr for FixChannel {
    type Err = NavError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(FixChannel::Auto),
            "laser" => Ok(FixChannel::Laser),
            "stereo" => Ok(FixChannel::Stereo),
            _ => Err(NavError::InvalidInput(format!(
                "unknown channel `{s}` (auto, laser, stereo)"
            ))),
        }
    }
}

/// How the two laser anchors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaserFixMode {
    /// The anchor baseline is re-measured (range and turret azimuth) from the
    /// anchor nearest the target, so only that anchor's estimate enters.
    #[default]
    HeadingReferenced,
    /// Plain two-circle intersection on both anchor estimates. Errors in the
    /// chain's heading compound leg over leg.
    RangeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    pub sensors: SensorSpec,
    pub noise: NoiseToggles,
    pub channel: FixChannel,
    pub laser_fix: LaserFixMode,
    /// Radial 1σ of the landing point when no fix guides the descent, m.
    pub landing_sigma_m: f64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            sensors: SensorSpec::default(),
            noise: NoiseToggles::default(),
            channel: FixChannel::Auto,
            laser_fix: LaserFixMode::HeadingReferenced,
            landing_sigma_m: 0.5,
        }
    }
}

impl LocalizationConfig {
    pub fn validate(&self) -> Result<(), NavError> {
        self.sensors.validate()?;
        if !(self.landing_sigma_m >= 0.0 && self.landing_sigma_m.is_finite()) {
            return Err(NavError::InvalidInput(format!(
                "landing_sigma_m must be non-negative, got {}",
                self.landing_sigma_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormationGeometry {
    pub leg_length_m: f64,
    /// Half of the zigzag's lateral spread, m.
    pub lane_offset_m: f64,
    /// Along-corridor spacing of vertices, m.
    pub advance_m: f64,
    pub origin_s: f64,
    /// Vertices are not placed beyond this arc length.
    pub max_s: f64,
    /// Lateral start offset of robot C, m.
    pub start_spread_m: f64,
}

impl FormationGeometry {
    pub fn new(
        leg_length_m: f64,
        corridor_half_width_m: f64,
        origin_s: f64,
        max_s: f64,
    ) -> Result<Self, NavError> {
        if !(leg_length_m > 0.0 && leg_length_m.is_finite()) {
            return Err(NavError::InvalidInput(format!(
                "leg length must be positive, got {leg_length_m}"
            )));
        }
        if !(max_s >= origin_s) {
            return Err(NavError::InvalidInput(format!(
                "max_s {max_s} is before origin {origin_s}"
            )));
        }
        let half = (corridor_half_width_m - SENSOR_HEIGHT_M).max(0.0);
        let w = (leg_length_m / 8.0).min(half);
        Ok(Self {
            leg_length_m,
            lane_offset_m: w,
            advance_m: (leg_length_m * leg_length_m - 4.0 * w * w).sqrt(),
            origin_s,
            max_s,
            start_spread_m: (4.0 * w).min(half),
        })
    }

    /// Floor-plane position `(s, lateral)` of vertex `k`.
    pub fn vertex(&self, k: u64) -> (f64, f64) {
        let s = (self.origin_s + k as f64 * self.advance_m).min(self.max_s);
        let lateral = if k.is_multiple_of(2) {
            self.lane_offset_m
        } else {
            -self.lane_offset_m
        };
        (s, lateral)
    }

    /// Starting floor-plane positions for robots A, B, C. A sits on vertex 0;
    /// C is spread across the corridor so the first fix has a usable baseline.
    pub fn start_slots(&self) -> [(f64, f64); 3] {
        let w = self.lane_offset_m;
        [
            (self.origin_s, w),
            (self.origin_s, -w),
            (self.origin_s, self.start_spread_m),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationState {
    /// Surviving robots in activity order.
    pub order: Vec<RobotId>,
    pub active: usize,
    pub phase: Phase,
    pub leg_index: u64,
    /// Index of the foremost occupied vertex.
    pub front_vertex: u64,
    pub geometry: FormationGeometry,
}

impl FormationState {
    pub fn new(robots: &[RobotId], geometry: FormationGeometry) -> Result<Self, NavError> {
        if robots.is_empty() || robots.len() > 3 {
            return Err(NavError::InvalidInput(format!(
                "formation needs 1 to 3 robots, got {}",
                robots.len()
            )));
        }
        let mut order = robots.to_vec();
        order.sort();
        order.dedup();
        if order.len() != robots.len() {
            return Err(NavError::InvalidInput("duplicate robot ids".into()));
        }
        Ok(Self {
            order,
            active: 0,
            phase: Phase::Planning,
            leg_index: 0,
            front_vertex: 0,
            geometry,
        })
    }

    pub fn active_robot(&self) -> Option<RobotId> {
        self.order.get(self.active).copied()
    }

    /// Landing point of the next leg, on the floor plus sensor height.
    pub fn next_target(&self, profile: &TubeProfile) -> Result<CorridorPoint, NavError> {
        let (s, lateral) = self.geometry.vertex(self.front_vertex + 1);
        Ok(CorridorPoint::new(
            s,
            lateral,
            profile.floor_at(s)? + SENSOR_HEIGHT_M,
        ))
    }

    fn complete_leg(&mut self) {
        self.leg_index += 1;
        self.front_vertex += 1;
        self.active = (self.active + 1) % self.order.len();
        self.phase = Phase::Planning;
    }

    /// Drops a robot from the rotation; activity continues with the robot
    /// that would have followed it.
    pub fn remove(&mut self, id: RobotId) -> bool {
        let Some(pos) = self.order.iter().position(|r| *r == id) else {
            return false;
        };
        self.order.remove(pos);
        if pos < self.active {
            self.active -= 1;
        }
        if self.active >= self.order.len() {
            self.active = 0;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimate {
    /// Base position, known exactly.
    pub anchor: PoseEstimate,
    pub estimates: BTreeMap<RobotId, PoseEstimate>,
    pub legs_completed: u64,
}

impl ChainEstimate {
    pub fn new(anchor_s: f64, anchor_lateral: f64) -> Self {
        Self {
            anchor: PoseEstimate::exact(anchor_s, anchor_lateral),
            estimates: BTreeMap::new(),
            legs_completed: 0,
        }
    }
}

/// Robots placed at their start slots with exact estimates.
pub fn initial_formation(
    robots: &[RobotId],
    geometry: FormationGeometry,
    profile: &TubeProfile,
) -> Result<
    (
        FormationState,
        ChainEstimate,
        BTreeMap<RobotId, CorridorPoint>,
    ),
    NavError,
> {
    let state = FormationState::new(robots, geometry)?;
    let mut chain = ChainEstimate::new(geometry.origin_s, 0.0);
    let mut truth = BTreeMap::new();
    let z = profile.floor_at(geometry.origin_s)? + SENSOR_HEIGHT_M;
    for (id, (s, lat)) in state.order.iter().zip(geometry.start_slots()) {
        chain.estimates.insert(*id, PoseEstimate::exact(s, lat));
        truth.insert(*id, CorridorPoint::new(s, lat, z));
    }
    Ok((state, chain, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixKind {
    /// Two laser ranges to the stationary pair.
    LaserTrilateration,
    /// Laser range to a single anchor with the stereo bearing.
    LaserRangeBearing,
    Stereo,
    DeadReckoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryWarning {
    pub robot: RobotId,
    pub quality: FixQuality,
    pub h_over_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegOutcome {
    pub leg_index: u64,
    pub mover: RobotId,
    pub from: CorridorPoint,
    pub target: CorridorPoint,
    /// True landing point.
    pub landed: CorridorPoint,
    pub estimate: PoseEstimate,
    pub fix: FixKind,
    pub measurements: Vec<Measurement>,
    pub warnings: Vec<GeometryWarning>,
}

struct Fix {
    estimate: PoseEstimate,
    kind: FixKind,
    measurements: Vec<Measurement>,
    warnings: Vec<GeometryWarning>,
}

fn xy(p: &CorridorPoint) -> Vector2<f64> {
    Vector2::new(p.s, p.lateral)
}

/// Moves the active robot to `target` and updates its estimate.
///
/// A fix is attempted from the target point: laser trilateration against
/// the two stationary robots, else a single-anchor range and bearing fix.
/// With a fix the descent is guided onto the target; without one the robot
/// lands with dispersion `landing_sigma_m` and keeps a dead-reckoned estimate.
pub fn advance_formation<R: Rng + ?Sized>(
    state: &mut FormationState,
    chain: &mut ChainEstimate,
    truth: &mut BTreeMap<RobotId, CorridorPoint>,
    target: CorridorPoint,
    profile: &TubeProfile,
    cfg: &LocalizationConfig,
    rng: &mut R,
) -> Result<LegOutcome, NavError> {
    let mover = state
        .active_robot()
        .ok_or_else(|| NavError::InvalidInput("no robots left in the formation".into()))?;
    let from = *truth.get(&mover).ok_or(NavError::UnknownRobot(mover))?;
    let old_est = *chain
        .estimates
        .get(&mover)
        .ok_or(NavError::UnknownRobot(mover))?;
    let planned = old_est.mean + (xy(&target) - xy(&from));

    state.phase = Phase::Airborne;
    let mut anchors: Vec<(RobotId, CorridorPoint, PoseEstimate)> = Vec::new();
    for id in state.order.iter().filter(|r| **r != mover) {
        let t = *truth.get(id).ok_or(NavError::UnknownRobot(*id))?;
        let e = *chain.estimates.get(id).ok_or(NavError::UnknownRobot(*id))?;
        anchors.push((*id, t, e));
    }
    anchors.sort_by(|a, b| {
        (a.2.mean - planned)
            .norm()
            .total_cmp(&(b.2.mean - planned).norm())
    });

    let fix = attempt_fix(mover, &target, planned, &anchors, profile, cfg, rng)?;
    state.phase = Phase::GroundedMeasuring;
    let (landed, estimate, kind, measurements, warnings) = match fix {
        Some(f) => (target, f.estimate, f.kind, f.measurements, f.warnings),
        None => {
            let axis = cfg.landing_sigma_m / std::f64::consts::SQRT_2;
            let landed = if cfg.noise.landing && axis > 0.0 {
                disperse(&target, axis, profile, rng)?
            } else {
                target
            };
            let est = PoseEstimate::new(planned, old_est.cov + Matrix2::identity() * axis * axis);
            (landed, est, FixKind::DeadReckoned, Vec::new(), Vec::new())
        }
    };

    truth.insert(mover, landed);
    chain.estimates.insert(mover, estimate);
    chain.legs_completed += 1;
    let leg_index = state.leg_index;
    state.complete_leg();
    Ok(LegOutcome {
        leg_index,
        mover,
        from,
        target,
        landed,
        estimate,
        fix: kind,
        measurements,
        warnings,
    })
}

fn disperse<R: Rng + ?Sized>(
    target: &CorridorPoint,
    axis: f64,
    profile: &TubeProfile,
    rng: &mut R,
) -> Result<CorridorPoint, NavError> {
    let n = Normal::new(0.0, axis).expect("finite sigma");
    let half = profile.width_m();
    let s = (target.s + n.sample(rng)).clamp(0.0, profile.length());
    let lateral = (target.lateral + n.sample(rng)).clamp(-half, half);
    let height = target.z - profile.floor_at(target.s)?;
    Ok(CorridorPoint::new(
        s,
        lateral,
        profile.floor_at(s)? + height,
    ))
}

#[allow(clippy::too_many_arguments)]
fn attempt_fix<R: Rng + ?Sized>(
    mover: RobotId,
    at: &CorridorPoint,
    planned: Vector2<f64>,
    anchors: &[(RobotId, CorridorPoint, PoseEstimate)],
    profile: &TubeProfile,
    cfg: &LocalizationConfig,
    rng: &mut R,
) -> Result<Option<Fix>, NavError> {
    let spec = &cfg.sensors;
    let use_laser = cfg.channel != FixChannel::Stereo;
    let use_stereo = cfg.channel != FixChannel::Laser;

    if use_laser && anchors.len() >= 2 {
        if let Some(fix) = laser_pair_fix(
            mover,
            at,
            planned,
            &anchors[0],
            &anchors[1],
            profile,
            cfg,
            rng,
        )? {
            return Ok(Some(fix));
        }
    }
    if use_laser && anchors.len() == 1 {
        // Pair mode: laser range, bearing from the stereo blob.
        let (id, pos, est) = &anchors[0];
        let laser = measure_laser(
            (mover, at),
            (*id, pos),
            spec,
            cfg.noise.laser,
            false,
            profile,
            rng,
        )?;
        if let Ok(laser) = laser {
            if let Ok(stereo) = measure_stereo(
                (mover, at),
                (*id, pos),
                spec,
                cfg.noise.stereo,
                profile,
                rng,
            )? {
                let (h, sigma_h) = laser.horizontal();
                let beta = stereo.bearing_rad.expect("stereo reports bearing");
                let dir = Vector2::new(beta.cos(), beta.sin());
                let cov = est.cov
                    + oriented_cov(
                        dir,
                        sigma_h,
                        spec.stereo_axis_sigma() * h / stereo.horizontal().0,
                    );
                return Ok(Some(Fix {
                    estimate: PoseEstimate::new(est.mean - dir * h, cov),
                    kind: FixKind::LaserRangeBearing,
                    measurements: vec![laser, stereo],
                    warnings: Vec::new(),
                }));
            }
        }
    }
    if use_stereo {
        for (id, pos, est) in anchors {
            if let Ok(m) = measure_stereo(
                (mover, at),
                (*id, pos),
                spec,
                cfg.noise.stereo,
                profile,
                rng,
            )? {
                let offset = m.offset().expect("stereo reports bearing");
                let h = offset.norm().max(1e-6);
                let axis = spec.stereo_axis_sigma();
                let cov = est.cov + oriented_cov(offset, axis * m.range_m / h, axis);
                return Ok(Some(Fix {
                    estimate: PoseEstimate::new(est.mean - offset, cov),
                    kind: FixKind::Stereo,
                    measurements: vec![m],
                    warnings: Vec::new(),
                }));
            }
        }
    }
    Ok(None)
}

/// `near` is the anchor closest to the target and serves as the reference.
#[allow(clippy::too_many_arguments)]
fn laser_pair_fix<R: Rng + ?Sized>(
    mover: RobotId,
    at: &CorridorPoint,
    planned: Vector2<f64>,
    near: &(RobotId, CorridorPoint, PoseEstimate),
    far: &(RobotId, CorridorPoint, PoseEstimate),
    profile: &TubeProfile,
    cfg: &LocalizationConfig,
    rng: &mut R,
) -> Result<Option<Fix>, NavError> {
    let spec = &cfg.sensors;
    let noisy = cfg.noise.laser;
    let Ok(m_far) = measure_laser(
        (mover, at),
        (far.0, &far.1),
        spec,
        noisy,
        false,
        profile,
        rng,
    )?
    else {
        return Ok(None);
    };
    let Ok(m_near) = measure_laser(
        (mover, at),
        (near.0, &near.1),
        spec,
        noisy,
        false,
        profile,
        rng,
    )?
    else {
        return Ok(None);
    };
    let (r_far, s_far) = m_far.horizontal();
    let (r_near, s_near) = m_near.horizontal();
    let mut measurements = vec![m_far, m_near];

    let (anchor_far, anchor_near, extra_cov) = match cfg.laser_fix {
        LaserFixMode::HeadingReferenced => {
            let Ok(base) = measure_laser(
                (near.0, &near.1),
                (far.0, &far.1),
                spec,
                noisy,
                true,
                profile,
                rng,
            )?
            else {
                return Ok(None);
            };
            measurements.push(base);
            let (rb, sb) = base.horizontal();
            let b = base.offset().expect("bearing requested");
            let local_far = PoseEstimate::new(
                near.2.mean + b,
                oriented_cov(b, sb, rb * spec.laser_bearing_sigma_rad),
            );
            let local_near = PoseEstimate::new(near.2.mean, Matrix2::zeros());
            (local_far, local_near, near.2.cov)
        }
        LaserFixMode::RangeOnly => (far.2, near.2, Matrix2::zeros()),
    };
    let side = Side::of_point(anchor_far.mean, anchor_near.mean, planned);
    let tri = trilaterate(
        &anchor_far,
        &anchor_near,
        RangeObservation::new(r_far, s_far),
        RangeObservation::new(r_near, s_near),
        side,
    )?;
    let mut warnings = Vec::new();
    if tri.quality != FixQuality::Nominal {
        warnings.push(GeometryWarning {
            robot: mover,
            quality: tri.quality,
            h_over_d: tri.h_over_d,
        });
    }
    Ok(Some(Fix {
        estimate: PoseEstimate::new(tri.estimate.mean, tri.estimate.cov + extra_cov),
        kind: FixKind::LaserTrilateration,
        measurements,
        warnings,
    }))
}
