use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::coverage::{scan, CoverageMap};
use super::events::{EventKind, EventLog};
use super::scenario::{Loss, ResolvedScenario, RobotConfig, Scenario};
use super::SimError;
use crate::hopplan::{
    plan_min_fuel_hop, sample_trajectory, Constraint, CorridorPoint, HopError, HopPlan,
    PlannerConfig,
};
use crate::navloc::{
    advance_formation, initial_formation, ChainEstimate, FixKind, FormationGeometry,
    FormationState, LegOutcome, PoseEstimate, RobotId, SENSOR_HEIGHT_M,
};
use crate::propulsion::{acs_allowance, propellant_for_dv};
use crate::terrain::WHEELED_SLOPE_LIMIT_DEG;

/// Hop lengths tried, as fractions of the leg, before giving up on flying.
const HOP_FRACTIONS: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RobotMode {
    Grounded,
    Airborne,
    /// Out of usable propellant, moving on wheels.
    Rolling,
    Depleted,
    Blocked,
    Lost,
}

impl RobotMode {
    pub fn in_mission(self) -> bool {
        matches!(
            self,
            RobotMode::Grounded | RobotMode::Airborne | RobotMode::Rolling
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotState {
    pub id: RobotId,
    pub true_pos: CorridorPoint,
    pub estimate: PoseEstimate,
    pub propellant_kg: f64,
    pub battery_wh: f64,
    pub mode: RobotMode,
    pub odometer_m: f64,
    pub hops_made: u64,
    pub rolls_made: u64,
    pub initial_propellant_kg: f64,
    pub initial_battery_wh: f64,
    #[serde(skip)]
    pub config: RobotConfig,
}

impl RobotState {
    pub fn mass_kg(&self) -> f64 {
        self.config.mass.dry_mass_kg + self.propellant_kg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionStatus {
    Running,
    Arrived,
    /// Every robot is depleted, blocked or lost.
    AllRobotsOut,
    /// Leg limit reached without arriving.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t_s: f64,
    pub robot: RobotId,
    pub true_s: f64,
    pub true_z: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub propellant_kg: f64,
    pub battery_wh: f64,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "t_s,robot,true_s,true_z,est_x,est_y,propellant_kg,battery_wh";

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(64 * rows.len() + 64);
    out.push_str(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t_s, r.robot, r.true_s, r.true_z, r.est_x, r.est_y, r.propellant_kg, r.battery_wh
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotSummary {
    pub id: RobotId,
    pub mode: RobotMode,
    pub final_s: f64,
    pub final_z: f64,
    pub radial_error_m: f64,
    pub hops: u64,
    pub rolls: u64,
    pub odometer_m: f64,
    pub propellant_initial_kg: f64,
    pub propellant_used_kg: f64,
    pub propellant_remaining_kg: f64,
    pub battery_initial_wh: f64,
    pub battery_used_wh: f64,
    pub battery_remaining_wh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub name: Option<String>,
    pub seed: u64,
    pub status: MissionStatus,
    pub arrived: bool,
    pub target_s: f64,
    pub legs: u64,
    pub hops: u64,
    pub duration_s: f64,
    pub distance_covered_m: f64,
    pub final_radial_error_m: f64,
    pub final_relative_error_pct: f64,
    pub coverage_fraction: f64,
    pub wheeled_infeasible: bool,
    pub max_traversed_slope_deg: f64,
    pub arc_samples_checked: u64,
    pub arc_samples_outside: u64,
    pub min_arc_floor_clearance_m: Option<f64>,
    pub min_arc_ceiling_clearance_m: Option<f64>,
    pub dead_reckoned_legs: u64,
    pub geometry_warnings: u64,
    pub robots: Vec<RobotSummary>,
}

impl MissionReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct MissionOutput {
    pub report: MissionReport,
    pub events: EventLog,
    pub coverage: CoverageMap,
    pub trajectory: Vec<TrajectoryRow>,
}

enum Movement {
    Hop {
        plan: HopPlan,
        shortened: u8,
    },
    Roll {
        dest: CorridorPoint,
    },
    /// Already on the target.
    Stay,
    /// The robot dropped out of the mission.
    Out,
}

pub struct Simulation {
    cfg: ResolvedScenario,
    robots: BTreeMap<RobotId, RobotState>,
    formation: FormationState,
    chain: ChainEstimate,
    truth: BTreeMap<RobotId, CorridorPoint>,
    rng: ChaCha8Rng,
    t_s: f64,
    events: EventLog,
    coverage: CoverageMap,
    trajectory: Vec<TrajectoryRow>,
    status: MissionStatus,
    legs: u64,
    max_legs: u64,
    pending_losses: Vec<Loss>,
    max_slope_deg: f64,
    arc_samples: u64,
    arc_outside: u64,
    min_floor_clear: Option<f64>,
    min_ceiling_clear: Option<f64>,
    dead_reckoned: u64,
    geometry_warnings: u64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        Self::from_resolved(scenario.resolve()?)
    }

    pub fn from_resolved(cfg: ResolvedScenario) -> Result<Self, SimError> {
        let profile = &cfg.profile;
        let leg = cfg.leg_length_m;
        let target_s = cfg.scenario.target_s;
        let max_s = (profile.length() - 0.5).min(target_s + leg);
        let geometry = FormationGeometry::new(leg, profile.width_m(), 0.0, max_s)?;
        let ids: Vec<RobotId> = cfg.robots.iter().map(|r| r.id).collect();
        let (formation, chain, truth) = initial_formation(&ids, geometry, profile)?;

        let robots = cfg
            .robots
            .iter()
            .map(|rc| {
                let battery = rc.power.capacity_wh();
                let state = RobotState {
                    id: rc.id,
                    true_pos: truth[&rc.id],
                    estimate: chain.estimates[&rc.id],
                    propellant_kg: rc.mass.propellant_kg,
                    battery_wh: battery,
                    mode: RobotMode::Grounded,
                    odometer_m: 0.0,
                    hops_made: 0,
                    rolls_made: 0,
                    initial_propellant_kg: rc.mass.propellant_kg,
                    initial_battery_wh: battery,
                    config: *rc,
                };
                (rc.id, state)
            })
            .collect();

        let max_legs = 10 * ((max_s / geometry.advance_m).ceil() as u64) + 100;
        let mut pending_losses = cfg.scenario.losses.clone();
        pending_losses.sort_by_key(|l| (l.leg, l.robot));
        let mut sim = Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.scenario.seed),
            coverage: CoverageMap::new(profile),
            cfg,
            robots,
            formation,
            chain,
            truth,
            t_s: 0.0,
            events: EventLog::default(),
            trajectory: Vec::new(),
            status: MissionStatus::Running,
            legs: 0,
            max_legs,
            pending_losses,
            max_slope_deg: 0.0,
            arc_samples: 0,
            arc_outside: 0,
            min_floor_clear: None,
            min_ceiling_clear: None,
            dead_reckoned: 0,
            geometry_warnings: 0,
        };
        let ids: Vec<RobotId> = sim.robots.keys().copied().collect();
        for id in ids {
            sim.scan_from(id)?;
        }
        sim.record_trajectory();
        sim.check_finished();
        Ok(sim)
    }

    pub fn status(&self) -> MissionStatus {
        self.status
    }

    pub fn is_finished(&self) -> bool {
        self.status != MissionStatus::Running
    }

    pub fn robots(&self) -> &BTreeMap<RobotId, RobotState> {
        &self.robots
    }

    pub fn formation(&self) -> &FormationState {
        &self.formation
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    pub fn coverage(&self) -> &CoverageMap {
        &self.coverage
    }

    pub fn time_s(&self) -> f64 {
        self.t_s
    }

    /// Takes a robot out of the network; the formation continues with the
    /// rest (pairwise leapfrog with two, dead reckoning with one).
    pub fn degrade_network(&mut self, id: RobotId) -> Result<(), SimError> {
        let robot = self.robots.get_mut(&id).ok_or(SimError::UnknownRobot(id))?;
        if robot.mode.in_mission() {
            robot.mode = RobotMode::Lost;
            self.formation.remove(id);
            self.events.push(self.t_s, Some(id), EventKind::Lost);
        }
        self.check_finished();
        Ok(())
    }

    /// One formation leg (or the removal of a robot that cannot move).
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let leg_index = self.formation.leg_index;
        while let Some(loss) = self
            .pending_losses
            .first()
            .copied()
            .filter(|l| l.leg <= leg_index)
        {
            self.pending_losses.remove(0);
            self.degrade_network(loss.robot)?;
        }
        if self.is_finished() {
            return Ok(());
        }
        let Some(mover) = self.formation.active_robot() else {
            self.check_finished();
            return Ok(());
        };
        let target = self.formation.next_target(&self.cfg.profile)?;
        let from = self.truth[&mover];

        let movement = self.choose_movement(mover, from, target)?;
        let dest = match &movement {
            Movement::Out => {
                self.check_finished();
                return Ok(());
            }
            Movement::Hop { plan, .. } => plan.target,
            Movement::Roll { dest } => *dest,
            Movement::Stay => from,
        };

        let loc = self.cfg.localization;
        let outcome = advance_formation(
            &mut self.formation,
            &mut self.chain,
            &mut self.truth,
            dest,
            &self.cfg.profile,
            &loc,
            &mut self.rng,
        )?;
        self.execute_leg(mover, from, movement, outcome)?;
        self.legs += 1;
        self.check_finished();
        if !self.is_finished() && self.legs >= self.max_legs {
            self.status = MissionStatus::Stalled;
        }
        Ok(())
    }

    fn choose_movement(
        &mut self,
        id: RobotId,
        from: CorridorPoint,
        target: CorridorPoint,
    ) -> Result<Movement, SimError> {
        if from.horizontal_distance(&target) < 1e-9 {
            return Ok(Movement::Stay);
        }
        let robot = &self.robots[&id];
        if robot.mode == RobotMode::Rolling {
            return self.try_roll(id, from, target);
        }
        if robot.propellant_kg <= robot.config.reserve_kg {
            return self.propellant_out(id, from, target);
        }

        let ops = self.cfg.scenario.operations;
        let planner = PlannerConfig::with_margin(ops.ceiling_margin_m);
        let mut binding: Option<Constraint> = None;
        for (k, frac) in HOP_FRACTIONS.iter().enumerate() {
            let dest = if k == 0 {
                target
            } else {
                self.point_toward(from, target, *frac)?
            };
            match plan_min_fuel_hop(from, dest, self.cfg.body, Some(&self.cfg.profile), &planner) {
                Ok(plan) => {
                    let (main, acs) = self.hop_propellant(id, &plan)?;
                    if robot.propellant_kg - main - acs < robot.config.reserve_kg {
                        return self.propellant_out(id, from, target);
                    }
                    return Ok(Movement::Hop {
                        plan,
                        shortened: k as u8,
                    });
                }
                Err(HopError::Infeasible { binding: b }) => binding = Some(b),
                Err(e) => return Err(e.into()),
            }
        }
        self.events.push(
            self.t_s,
            Some(id),
            EventKind::Blocked {
                at_s: from.s,
                toward_s: target.s,
                binding,
                reason: "no feasible hop at full, half or quarter leg length".into(),
            },
        );
        if self.cfg.scenario.toggles.rolling {
            self.try_roll(id, from, target)
        } else {
            self.drop_robot(id, RobotMode::Blocked);
            Ok(Movement::Out)
        }
    }

    fn propellant_out(
        &mut self,
        id: RobotId,
        from: CorridorPoint,
        target: CorridorPoint,
    ) -> Result<Movement, SimError> {
        let remaining = self.robots[&id].propellant_kg;
        self.events.push(
            self.t_s,
            Some(id),
            EventKind::Depleted {
                reason: format!("propellant {remaining:.6} kg is at or below the reserve"),
            },
        );
        if self.cfg.scenario.toggles.rolling {
            self.robots.get_mut(&id).expect("robot exists").mode = RobotMode::Rolling;
            self.try_roll(id, from, target)
        } else {
            self.drop_robot(id, RobotMode::Depleted);
            Ok(Movement::Out)
        }
    }

    fn try_roll(
        &mut self,
        id: RobotId,
        from: CorridorPoint,
        target: CorridorPoint,
    ) -> Result<Movement, SimError> {
        let slope = self.cfg.profile.max_slope_between(from.s, target.s)?;
        if slope > WHEELED_SLOPE_LIMIT_DEG {
            self.events.push(
                self.t_s,
                Some(id),
                EventKind::Blocked {
                    at_s: from.s,
                    toward_s: target.s,
                    binding: None,
                    reason: format!("rolling blocked by a {slope:.1} deg slope"),
                },
            );
            self.drop_robot(id, RobotMode::Blocked);
            return Ok(Movement::Out);
        }
        let ops = self.cfg.scenario.operations;
        let robot = &self.robots[&id];
        let duration = roll_distance(&from, &target) / ops.rolling_speed_m_per_s;
        let need = (ops.rolling_drive_w + robot.config.power.total_draw_w())
            * (duration + ops.dwell_s)
            / 3600.0;
        if robot.battery_wh < need {
            self.events.push(
                self.t_s,
                Some(id),
                EventKind::Depleted {
                    reason: "battery too low to roll the next leg".into(),
                },
            );
            self.drop_robot(id, RobotMode::Depleted);
            return Ok(Movement::Out);
        }
        Ok(Movement::Roll { dest: target })
    }

    fn drop_robot(&mut self, id: RobotId, mode: RobotMode) {
        if let Some(r) = self.robots.get_mut(&id) {
            r.mode = mode;
        }
        self.formation.remove(id);
    }

    fn point_toward(
        &self,
        from: CorridorPoint,
        to: CorridorPoint,
        frac: f64,
    ) -> Result<CorridorPoint, SimError> {
        let s = from.s + frac * (to.s - from.s);
        let lateral = from.lateral + frac * (to.lateral - from.lateral);
        Ok(CorridorPoint::new(
            s,
            lateral,
            self.cfg.profile.floor_at(s)? + SENSOR_HEIGHT_M,
        ))
    }

    fn hop_propellant(&self, id: RobotId, plan: &HopPlan) -> Result<(f64, f64), SimError> {
        let robot = &self.robots[&id];
        let engine = &robot.config.engine;
        let m0 = robot.mass_kg();
        let main = propellant_for_dv(engine, m0, plan.dv_total, false)?;
        let acs = acs_allowance(
            engine,
            m0 - main,
            self.cfg.scenario.operations.acs_dv_per_hop_m_per_s,
        )?;
        Ok((main, acs))
    }

    fn execute_leg(
        &mut self,
        id: RobotId,
        from: CorridorPoint,
        movement: Movement,
        outcome: LegOutcome,
    ) -> Result<(), SimError> {
        let ops = self.cfg.scenario.operations;
        let t0 = self.t_s;
        let mut landed = outcome.landed;
        let travel_s = match movement {
            Movement::Hop { plan, shortened } => {
                // A dead-reckoned landing is dispersed: the arc actually flown
                // ends there.
                let flown = if landed != plan.target {
                    let planner = PlannerConfig::with_margin(ops.ceiling_margin_m);
                    match plan_min_fuel_hop(
                        from,
                        landed,
                        self.cfg.body,
                        Some(&self.cfg.profile),
                        &planner,
                    ) {
                        Ok(p) => p,
                        Err(_) => {
                            landed = plan.target;
                            self.truth.insert(id, landed);
                            plan
                        }
                    }
                } else {
                    plan
                };
                let (main, acs) = self.hop_propellant(id, &flown)?;
                let robot = self.robots.get_mut(&id).expect("robot exists");
                robot.propellant_kg -= main + acs;
                robot.hops_made += 1;
                robot.odometer_m += flown.horizontal_range();
                robot.mode = RobotMode::Airborne;
                let remaining = robot.propellant_kg;
                self.events.push(
                    t0,
                    Some(id),
                    EventKind::Hop {
                        from_s: from.s,
                        from_z: from.z,
                        to_s: landed.s,
                        to_z: landed.z,
                        launch_angle_deg: flown.launch_angle,
                        dv_total_mps: flown.dv_total,
                        flight_time_s: flown.flight_time,
                        apex_z: flown.apex_z,
                        propellant_main_kg: main,
                        propellant_acs_kg: acs,
                        propellant_remaining_kg: remaining,
                        shortened,
                    },
                );
                self.check_arc(&flown)?;
                flown.flight_time
            }
            Movement::Roll { .. } => {
                let distance = roll_distance(&from, &landed);
                let duration = distance / ops.rolling_speed_m_per_s;
                let robot = self.robots.get_mut(&id).expect("robot exists");
                let wh = (ops.rolling_drive_w * duration / 3600.0).min(robot.battery_wh);
                robot.battery_wh -= wh;
                robot.rolls_made += 1;
                robot.odometer_m += from.horizontal_distance(&landed);
                self.events.push(
                    t0,
                    Some(id),
                    EventKind::Rolled {
                        from_s: from.s,
                        to_s: landed.s,
                        distance_m: distance,
                        duration_s: duration,
                        battery_wh: wh,
                    },
                );
                duration
            }
            Movement::Stay => 0.0,
            Movement::Out => unreachable!("handled before the leg"),
        };

        let slope = self.cfg.profile.max_slope_between(from.s, landed.s)?;
        self.max_slope_deg = self.max_slope_deg.max(slope);

        let t_land = t0 + travel_s;
        {
            let robot = self.robots.get_mut(&id).expect("robot exists");
            robot.true_pos = landed;
            robot.estimate = outcome.estimate;
            if robot.mode == RobotMode::Airborne {
                robot.mode = RobotMode::Grounded;
            }
        }
        self.events.push(
            t_land,
            Some(id),
            EventKind::Land {
                s: landed.s,
                lateral: landed.lateral,
                z: landed.z,
            },
        );
        for m in &outcome.measurements {
            self.events.push(
                t_land,
                Some(id),
                EventKind::Measure {
                    measurement: m.kind,
                    observer: m.observer,
                    target: m.target,
                    range_m: m.range_m,
                    bearing_rad: m.bearing_rad,
                },
            );
        }
        let est = outcome.estimate;
        if outcome.fix == FixKind::DeadReckoned {
            self.dead_reckoned += 1;
            self.events.push(
                t_land,
                Some(id),
                EventKind::DeadReckoned {
                    est_x: est.mean.x,
                    est_y: est.mean.y,
                    cov_trace_m2: est.trace(),
                },
            );
        } else {
            self.events.push(
                t_land,
                Some(id),
                EventKind::Trilaterated {
                    fix: outcome.fix,
                    est_x: est.mean.x,
                    est_y: est.mean.y,
                    cov_trace_m2: est.trace(),
                },
            );
        }
        for w in &outcome.warnings {
            self.geometry_warnings += 1;
            self.events.push(
                t_land,
                Some(id),
                EventKind::GeometryWarning {
                    quality: w.quality,
                    h_over_d: w.h_over_d,
                },
            );
        }
        self.t_s = t_land;
        self.scan_from(id)?;

        let t_end = t_land + ops.dwell_s;
        self.housekeeping(t_end - t0, t_end);
        self.t_s = t_end;
        self.record_trajectory();
        Ok(())
    }

    fn check_arc(&mut self, plan: &HopPlan) -> Result<(), SimError> {
        let profile = &self.cfg.profile;
        for sample in sample_trajectory(plan, self.cfg.scenario.operations.arc_check_dt_s)? {
            let floor_gap = sample.z - profile.floor_at(sample.s)?;
            let ceiling_gap = profile.ceiling_at(sample.s)? - sample.z;
            self.arc_samples += 1;
            if floor_gap <= 0.0 || ceiling_gap <= 0.0 {
                self.arc_outside += 1;
            }
            self.min_floor_clear =
                Some(self.min_floor_clear.map_or(floor_gap, |m| m.min(floor_gap)));
            self.min_ceiling_clear = Some(
                self.min_ceiling_clear
                    .map_or(ceiling_gap, |m| m.min(ceiling_gap)),
            );
        }
        Ok(())
    }

    fn scan_from(&mut self, id: RobotId) -> Result<(), SimError> {
        if !self.cfg.scenario.toggles.scan {
            return Ok(());
        }
        let cost = self.cfg.scenario.operations.scan_cost_wh;
        let robot = self.robots.get_mut(&id).expect("robot exists");
        if !robot.mode.in_mission() || robot.battery_wh < cost {
            return Ok(());
        }
        robot.battery_wh -= cost;
        let at = robot.true_pos;
        let fresh = scan(
            &mut self.coverage,
            &self.cfg.profile,
            &at,
            self.cfg.localization.sensors.laser_max_range_m,
            self.t_s,
        )?;
        self.events.push(
            self.t_s,
            Some(id),
            EventKind::Scan {
                newly_observed: fresh,
                battery_wh: cost,
            },
        );
        Ok(())
    }

    /// Avionics and lights draw of every robot still in the mission.
    fn housekeeping(&mut self, duration_s: f64, t_end: f64) {
        let ids: Vec<RobotId> = self.robots.keys().copied().collect();
        for id in ids {
            let robot = self.robots.get_mut(&id).expect("robot exists");
            if !robot.mode.in_mission() {
                continue;
            }
            let wh =
                (robot.config.power.total_draw_w() * duration_s / 3600.0).min(robot.battery_wh);
            robot.battery_wh -= wh;
            let remaining = robot.battery_wh;
            self.events.push(
                t_end,
                Some(id),
                EventKind::Power {
                    duration_s,
                    battery_wh: wh,
                    battery_remaining_wh: remaining,
                },
            );
            if remaining <= 0.0 && robot.config.power.total_draw_w() > 0.0 {
                self.events.push(
                    t_end,
                    Some(id),
                    EventKind::Depleted {
                        reason: "battery exhausted".into(),
                    },
                );
                self.drop_robot(id, RobotMode::Depleted);
            }
        }
    }

    fn record_trajectory(&mut self) {
        for r in self.robots.values() {
            self.trajectory.push(TrajectoryRow {
                t_s: self.t_s,
                robot: r.id,
                true_s: r.true_pos.s,
                true_z: r.true_pos.z,
                est_x: r.estimate.mean.x,
                est_y: r.estimate.mean.y,
                propellant_kg: r.propellant_kg,
                battery_wh: r.battery_wh,
            });
        }
    }

    fn check_finished(&mut self) {
        if self.is_finished() {
            return;
        }
        let active: Vec<&RobotState> = self
            .robots
            .values()
            .filter(|r| r.mode.in_mission())
            .collect();
        if active.is_empty() {
            self.status = MissionStatus::AllRobotsOut;
            return;
        }
        let target = self.cfg.scenario.target_s;
        if active
            .iter()
            .all(|r| r.true_pos.s >= target - self.cfg.leg_length_m)
        {
            self.status = MissionStatus::Arrived;
            self.events
                .push(self.t_s, None, EventKind::Arrived { target_s: target });
        }
    }

    pub fn report(&self) -> MissionReport {
        let base = self.chain.anchor.mean;
        let summaries: Vec<RobotSummary> = self
            .robots
            .values()
            .map(|r| RobotSummary {
                id: r.id,
                mode: r.mode,
                final_s: r.true_pos.s,
                final_z: r.true_pos.z,
                radial_error_m: r.estimate.distance_to(r.true_pos.s, r.true_pos.lateral),
                hops: r.hops_made,
                rolls: r.rolls_made,
                odometer_m: r.odometer_m,
                propellant_initial_kg: r.initial_propellant_kg,
                propellant_used_kg: r.initial_propellant_kg - r.propellant_kg,
                propellant_remaining_kg: r.propellant_kg,
                battery_initial_wh: r.initial_battery_wh,
                battery_used_wh: r.initial_battery_wh - r.battery_wh,
                battery_remaining_wh: r.battery_wh,
            })
            .collect();
        let in_mission: Vec<&RobotState> = self
            .robots
            .values()
            .filter(|r| r.mode.in_mission())
            .collect();
        let pool: Vec<&RobotState> = if in_mission.is_empty() {
            self.robots.values().collect()
        } else {
            in_mission
        };
        let n = pool.len() as f64;
        let err = pool
            .iter()
            .map(|r| r.estimate.distance_to(r.true_pos.s, r.true_pos.lateral))
            .sum::<f64>()
            / n;
        let dist = pool
            .iter()
            .map(|r| (r.true_pos.s - base.x).hypot(r.true_pos.lateral - base.y))
            .sum::<f64>()
            / n;
        MissionReport {
            name: self.cfg.scenario.name.clone(),
            seed: self.cfg.scenario.seed,
            status: self.status,
            arrived: self.status == MissionStatus::Arrived,
            target_s: self.cfg.scenario.target_s,
            legs: self.legs,
            hops: self.robots.values().map(|r| r.hops_made).sum(),
            duration_s: self.t_s,
            distance_covered_m: self
                .robots
                .values()
                .map(|r| r.true_pos.s)
                .fold(0.0, f64::max),
            final_radial_error_m: err,
            final_relative_error_pct: if dist > 0.0 { 100.0 * err / dist } else { 0.0 },
            coverage_fraction: self.coverage.fraction(),
            wheeled_infeasible: self.max_slope_deg > WHEELED_SLOPE_LIMIT_DEG,
            max_traversed_slope_deg: self.max_slope_deg,
            arc_samples_checked: self.arc_samples,
            arc_samples_outside: self.arc_outside,
            min_arc_floor_clearance_m: self.min_floor_clear,
            min_arc_ceiling_clearance_m: self.min_ceiling_clear,
            dead_reckoned_legs: self.dead_reckoned,
            geometry_warnings: self.geometry_warnings,
            robots: summaries,
        }
    }

    pub fn into_output(self) -> MissionOutput {
        MissionOutput {
            report: self.report(),
            events: self.events,
            coverage: self.coverage,
            trajectory: self.trajectory,
        }
    }
}

fn roll_distance(a: &CorridorPoint, b: &CorridorPoint) -> f64 {
    a.horizontal_distance(b).hypot(b.z - a.z)
}

/// Steps a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<MissionOutput, SimError> {
    let mut sim = Simulation::new(scenario)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.into_output())
}
