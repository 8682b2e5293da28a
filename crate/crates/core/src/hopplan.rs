//! Fuel-minimal impulsive fly-hops under constant gravity.
//!
//! A hop is a launch burn, a ballistic arc and a landing burn that cancels the
//! touchdown velocity. For a launch angle θ over horizontal range R with net
//! height change dz the launch speed is fixed by
//!
//! ```text
//! v² = g R² / (2 cos²θ (R tanθ − dz))
//! ```
//!
//! and the arc height as a function of the horizontal fraction `u ∈ [0, 1]`
//! reduces to `z(u) = z0 + A u − (A − dz) u²` with `A = R tanθ`, independent
//! of gravity. The planner searches θ for the smallest total delta-v whose arc
//! stays under the ceiling (less a margin) and above the floor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::propulsion::{propellant_for_dv, EngineSpec, MassBudget, PropulsionError};
use crate::terrain::{TerrainError, TubeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyConstants {
    /// Surface gravity, m/s².
    pub g: f64,
}

impl BodyConstants {
    pub const MOON: BodyConstants = BodyConstants { g: 1.62 };
    pub const MARS: BodyConstants = BodyConstants { g: 3.71 };

    pub fn new(g: f64) -> Result<Self, HopError> {
        if g > 0.0 && g.is_finite() {
            Ok(Self { g })
        } else {
            Err(HopError::InvalidInput(format!(
                "gravity must be positive, got {g}"
            )))
        }
    }

    /// `moon`, `mars`, or a positive number in m/s².
    pub fn parse(name: &str) -> Result<Self, HopError> {
        match name.to_ascii_lowercase().as_str() {
            "moon" => Ok(Self::MOON),
            "mars" => Ok(Self::MARS),
            other => other
                .parse::<f64>()
                .map_err(|_| {
                    HopError::InvalidInput(format!(
                        "unknown body `{name}` (use moon, mars or a value in m/s²)"
                    ))
                })
                .and_then(Self::new),
        }
    }
}

/// Which constraint made a hop impossible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// No launch angle below the angle cap can gain the required height.
    AngleTooShallow,
    Ceiling,
    Floor,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Constraint::AngleTooShallow => "launch angle",
            Constraint::Ceiling => "ceiling clearance",
            Constraint::Floor => "floor clearance",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HopError {
    #[error("no feasible hop: {binding} is binding")]
    Infeasible { binding: Constraint },
    #[error("invalid hop request: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Propulsion(#[from] PropulsionError),
}

/// Position in corridor coordinates: arc length `s`, cross-corridor offset
/// `lateral` and height `z`. The floor-plane projection is `(s, lateral)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorPoint {
    pub s: f64,
    pub lateral: f64,
    pub z: f64,
}

impl CorridorPoint {
    pub fn new(s: f64, lateral: f64, z: f64) -> Self {
        Self { s, lateral, z }
    }

    pub fn on_axis(s: f64, z: f64) -> Self {
        Self { s, lateral: 0.0, z }
    }

    pub fn horizontal_distance(&self, other: &CorridorPoint) -> f64 {
        (other.s - self.s).hypot(other.lateral - self.lateral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallisticSolution {
    pub speed: f64,
    pub flight_time: f64,
}

/// Launch speed and flight time for a fixed launch angle.
pub fn ballistic_solve(
    range: f64,
    dz: f64,
    g: f64,
    theta_deg: f64,
) -> Result<BallisticSolution, HopError> {
    if !(range > 0.0) {
        return Err(HopError::InvalidInput(format!(
            "range must be positive, got {range}"
        )));
    }
    if !(theta_deg > 0.0 && theta_deg < 90.0) {
        return Err(HopError::InvalidInput(format!(
            "launch angle must be in (0, 90), got {theta_deg}"
        )));
    }
    if !(g > 0.0) {
        return Err(HopError::InvalidInput(format!(
            "gravity must be positive, got {g}"
        )));
    }
    let theta = theta_deg.to_radians();
    let rise = range * theta.tan() - dz;
    if rise <= 0.0 {
        return Err(HopError::Infeasible {
            binding: Constraint::AngleTooShallow,
        });
    }
    let cos = theta.cos();
    let speed = (g * range * range / (2.0 * cos * cos * rise)).sqrt();
    Ok(BallisticSolution {
        speed,
        flight_time: range / (speed * cos),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopPlan {
    pub origin: CorridorPoint,
    pub target: CorridorPoint,
    pub gravity: f64,
    pub launch_speed: f64,
    /// Degrees above horizontal.
    pub launch_angle: f64,
    pub flight_time: f64,
    pub apex_z: f64,
    pub dv_launch: f64,
    pub dv_land: f64,
    pub dv_total: f64,
    /// Main-engine propellant for both burns; zero until [`HopPlan::with_propellant`].
    pub propellant_kg: f64,
}

impl HopPlan {
    pub fn horizontal_range(&self) -> f64 {
        self.origin.horizontal_distance(&self.target)
    }

    /// Fills in the main-engine propellant for a vehicle of mass `m0_kg`.
    pub fn with_propellant(mut self, engine: &EngineSpec, m0_kg: f64) -> Result<Self, HopError> {
        self.propellant_kg = propellant_for_dv(engine, m0_kg, self.dv_total, false)?;
        Ok(self)
    }

    /// Height of the arc at horizontal fraction `u`.
    pub fn height_at_fraction(&self, u: f64) -> f64 {
        let a = self.horizontal_range() * self.launch_angle.to_radians().tan();
        let dz = self.target.z - self.origin.z;
        self.origin.z + a * u - (a - dz) * u * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Required gap between the arc and the ceiling, m.
    pub margin_m: f64,
    pub grid_step_deg: f64,
    pub tolerance_deg: f64,
    pub max_angle_deg: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            margin_m: 0.5,
            grid_step_deg: 0.1,
            tolerance_deg: 1e-4,
            max_angle_deg: 89.0,
        }
    }
}

impl PlannerConfig {
    pub fn with_margin(margin_m: f64) -> Self {
        Self {
            margin_m,
            ..Self::default()
        }
    }
}

fn plan_for_angle(
    origin: CorridorPoint,
    target: CorridorPoint,
    g: f64,
    theta_deg: f64,
) -> Result<HopPlan, HopError> {
    let range = origin.horizontal_distance(&target);
    let dz = target.z - origin.z;
    let sol = ballistic_solve(range, dz, g, theta_deg)?;
    let a = range * theta_deg.to_radians().tan();
    let rise = a - dz;
    let u_apex = a / (2.0 * rise);
    let apex_z = if (0.0..=1.0).contains(&u_apex) {
        origin.z + a * a / (4.0 * rise)
    } else {
        origin.z.max(target.z)
    };
    let dv_land = (sol.speed * sol.speed - 2.0 * g * dz).max(0.0).sqrt();
    Ok(HopPlan {
        origin,
        target,
        gravity: g,
        launch_speed: sol.speed,
        launch_angle: theta_deg,
        flight_time: sol.flight_time,
        apex_z,
        dv_launch: sol.speed,
        dv_land,
        dv_total: sol.speed + dv_land,
        propellant_kg: 0.0,
    })
}

/// Checks the arc against the corridor exactly.
///
/// Both the floor and the ceiling are linear between stations, so in each
/// station interval the ceiling gap is a concave quadratic (worst at an end or
/// at its stationary point) and the floor gap is convex (worst at an end).
fn violated_constraint(
    plan: &HopPlan,
    profile: &TubeProfile,
    margin: f64,
) -> Result<Option<Constraint>, HopError> {
    const TOL: f64 = 1e-9;
    let (s0, s1) = (plan.origin.s, plan.target.s);
    let ds = s1 - s0;
    let mut knots = vec![0.0];
    if ds != 0.0 {
        let (lo, hi) = if ds > 0.0 { (s0, s1) } else { (s1, s0) };
        let mut interior: Vec<f64> = profile
            .stations()
            .iter()
            .filter(|st| st.s > lo && st.s < hi)
            .map(|st| (st.s - s0) / ds)
            .collect();
        interior.sort_by(f64::total_cmp);
        knots.extend(interior);
    }
    knots.push(1.0);

    let s_at = |u: f64| if u >= 1.0 { s1 } else { s0 + u * ds };
    let a = plan.horizontal_range() * plan.launch_angle.to_radians().tan();
    let rise = a - (plan.target.z - plan.origin.z);

    for &u in &knots[1..knots.len() - 1] {
        if plan.height_at_fraction(u) <= profile.floor_at(s_at(u))? {
            return Ok(Some(Constraint::Floor));
        }
    }
    for w in knots.windows(2) {
        let (ua, ub) = (w[0], w[1]);
        let (ca, cb) = (
            profile.ceiling_at(s_at(ua))? - margin,
            profile.ceiling_at(s_at(ub))? - margin,
        );
        let mut candidates = vec![(ua, ca), (ub, cb)];
        if ub > ua {
            let slope = (cb - ca) / (ub - ua);
            let u_star = (a - slope) / (2.0 * rise);
            if u_star > ua && u_star < ub {
                candidates.push((u_star, ca + slope * (u_star - ua)));
            }
        }
        if candidates
            .iter()
            .any(|&(u, c)| plan.height_at_fraction(u) > c + TOL)
        {
            return Ok(Some(Constraint::Ceiling));
        }
    }
    Ok(None)
}

enum Evaluation {
    Feasible(HopPlan),
    Blocked(Constraint),
}

fn evaluate(
    origin: CorridorPoint,
    target: CorridorPoint,
    g: f64,
    profile: Option<&TubeProfile>,
    margin: f64,
    theta: f64,
) -> Result<Evaluation, HopError> {
    let plan = match plan_for_angle(origin, target, g, theta) {
        Ok(p) => p,
        Err(HopError::Infeasible { binding }) => return Ok(Evaluation::Blocked(binding)),
        Err(e) => return Err(e),
    };
    if let Some(profile) = profile {
        if let Some(c) = violated_constraint(&plan, profile, margin)? {
            return Ok(Evaluation::Blocked(c));
        }
    }
    Ok(Evaluation::Feasible(plan))
}

/// Minimum total delta-v hop from `origin` to `target`.
///
/// Launch angles are scanned on a grid over (θ_min, max_angle] and the best
/// feasible grid point is refined by golden-section search, treating
/// infeasible angles as infinitely expensive. Without a profile the hop is
/// unconstrained.
pub fn plan_min_fuel_hop(
    origin: CorridorPoint,
    target: CorridorPoint,
    body: BodyConstants,
    profile: Option<&TubeProfile>,
    config: &PlannerConfig,
) -> Result<HopPlan, HopError> {
    let range = origin.horizontal_distance(&target);
    if !(range > 0.0) {
        return Err(HopError::InvalidInput(
            "origin and target must be horizontally separated".into(),
        ));
    }
    if let Some(p) = profile {
        for (name, pt) in [("origin", origin), ("target", target)] {
            if pt.z < p.floor_at(pt.s)? {
                return Err(HopError::InvalidInput(format!("{name} is below the floor")));
            }
        }
    }
    let g = body.g;
    let dz = target.z - origin.z;
    let theta_lo = (dz / range).atan().to_degrees().max(0.0);
    let step = config.grid_step_deg;

    let mut best: Option<HopPlan> = None;
    let mut binding = Constraint::AngleTooShallow;
    let mut k = 1usize;
    loop {
        let theta = (theta_lo + k as f64 * step).min(config.max_angle_deg);
        if theta <= theta_lo {
            break;
        }
        match evaluate(origin, target, g, profile, config.margin_m, theta)? {
            Evaluation::Feasible(plan) => {
                if best.is_none_or(|b| plan.dv_total < b.dv_total) {
                    best = Some(plan);
                }
            }
            Evaluation::Blocked(c) => {
                // Ceiling beats floor beats angle as the reported reason.
                binding = match (binding, c) {
                    (Constraint::Ceiling, _) | (_, Constraint::Ceiling) => Constraint::Ceiling,
                    (Constraint::Floor, _) | (_, Constraint::Floor) => Constraint::Floor,
                    _ => c,
                };
            }
        }
        if theta >= config.max_angle_deg {
            break;
        }
        k += 1;
    }
    let mut best = best.ok_or(HopError::Infeasible { binding })?;

    let lo_bound = theta_lo + config.tolerance_deg * 1e-3;
    let mut a = (best.launch_angle - step).max(lo_bound);
    let mut b = (best.launch_angle + step).min(config.max_angle_deg);
    let cost = |theta: f64, best: &mut HopPlan| -> Result<f64, HopError> {
        Ok(
            match evaluate(origin, target, g, profile, config.margin_m, theta)? {
                Evaluation::Feasible(plan) => {
                    if plan.dv_total < best.dv_total {
                        *best = plan;
                    }
                    plan.dv_total
                }
                Evaluation::Blocked(_) => f64::INFINITY,
            },
        )
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = cost(c, &mut best)?;
    let mut fd = cost(d, &mut best)?;
    while b - a > config.tolerance_deg {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c, &mut best)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d, &mut best)?;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: f64,
    pub lateral: f64,
    pub z: f64,
    pub vs: f64,
    pub v_lateral: f64,
    pub vz: f64,
}

impl TrajectorySample {
    pub fn speed(&self) -> f64 {
        (self.vs * self.vs + self.v_lateral * self.v_lateral + self.vz * self.vz).sqrt()
    }
}

/// Samples the arc every `dt` seconds; the last sample is at touchdown.
pub fn sample_trajectory(plan: &HopPlan, dt: f64) -> Result<Vec<TrajectorySample>, HopError> {
    if !(dt > 0.0) {
        return Err(HopError::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let range = plan.horizontal_range();
    let theta = plan.launch_angle.to_radians();
    let vh = plan.launch_speed * theta.cos();
    let vz0 = plan.launch_speed * theta.sin();
    let (dir_s, dir_l) = (
        (plan.target.s - plan.origin.s) / range,
        (plan.target.lateral - plan.origin.lateral) / range,
    );
    let at = |t: f64| {
        let h = vh * t;
        TrajectorySample {
            t,
            s: plan.origin.s + h * dir_s,
            lateral: plan.origin.lateral + h * dir_l,
            z: plan.origin.z + vz0 * t - 0.5 * plan.gravity * t * t,
            vs: vh * dir_s,
            v_lateral: vh * dir_l,
            vz: vz0 - plan.gravity * t,
        }
    };
    let n = (plan.flight_time / dt).floor() as usize;
    let mut out: Vec<TrajectorySample> = (0..=n).map(|i| at(i as f64 * dt)).collect();
    if out.last().is_some_and(|l| l.t < plan.flight_time) {
        out.push(at(plan.flight_time));
    }
    Ok(out)
}

/// Delta-v of one unconstrained level hop of length `hop_length` (45° launch).
pub fn flat_hop_dv(hop_length: f64, body: BodyConstants) -> f64 {
    2.0 * (body.g * hop_length).sqrt()
}

/// Distance covered by repeating level hops until the delta-v budget runs out.
pub fn hop_sequence_range(
    dv_budget: f64,
    hop_length: f64,
    body: BodyConstants,
) -> Result<f64, HopError> {
    if !(hop_length > 0.0) {
        return Err(HopError::InvalidInput(format!(
            "hop length must be positive, got {hop_length}"
        )));
    }
    let hops = (dv_budget.max(0.0) / flat_hop_dv(hop_length, body)).floor();
    Ok(hops * hop_length)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeRow {
    pub hop_length_m: f64,
    pub dv_per_hop_mps: f64,
    pub propellant_per_hop_kg: f64,
    pub flight_time_s: f64,
    pub total_range_m: f64,
}

/// Fuel-versus-range table over hop lengths on level ground.
pub fn compare_modes(
    body: BodyConstants,
    hop_lengths: &[f64],
    engine: &EngineSpec,
    budget: &MassBudget,
) -> Result<Vec<ModeRow>, HopError> {
    if hop_lengths.is_empty() {
        return Err(HopError::InvalidInput(
            "at least one hop length is required".into(),
        ));
    }
    let dv_budget = crate::propulsion::dv_capacity(engine, budget)?;
    hop_lengths
        .iter()
        .map(|&len| {
            let plan = plan_min_fuel_hop(
                CorridorPoint::on_axis(0.0, 0.0),
                CorridorPoint::on_axis(len, 0.0),
                body,
                None,
                &PlannerConfig::default(),
            )?
            .with_propellant(engine, budget.total_kg())?;
            Ok(ModeRow {
                hop_length_m: len,
                dv_per_hop_mps: plan.dv_total,
                propellant_per_hop_kg: plan.propellant_kg,
                flight_time_s: plan.flight_time,
                total_range_m: hop_sequence_range(dv_budget, len, body)?,
            })
        })
        .collect()
}

pub const MODE_CSV_HEADER: &str =
    "hop_length_m,dv_per_hop_mps,propellant_per_hop_kg,flight_time_s,total_range_m";

pub fn modes_csv(rows: &[ModeRow]) -> String {
    let mut out = String::from(MODE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.9},{:.6},{}\n",
            r.hop_length_m,
            r.dv_per_hop_mps,
            r.propellant_per_hop_kg,
            r.flight_time_s,
            r.total_range_m
        ));
    }
    out
}
