use serde::{Deserialize, Serialize};

use super::SimError;
use crate::hopplan::BodyConstants;
use crate::navloc::{
    FixChannel, LaserFixMode, LocalizationConfig, NoiseToggles, RobotId, SensorSpec,
};
use crate::propulsion::{EngineSpec, MassBudget, PowerSpec};
use crate::terrain::{TubeProfile, TubeProfileFile};

/// Tube geometry: a preset name or an inline profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSetting {
    Preset(String),
    Inline(TubeProfileFile),
}

impl ProfileSetting {
    pub fn resolve(&self) -> Result<TubeProfile, SimError> {
        Ok(match self {
            ProfileSetting::Preset(name) => TubeProfile::preset(name)?,
            ProfileSetting::Inline(file) => TubeProfile::try_from(file.clone())?,
        })
    }
}

/// `"moon"`, `"mars"` or surface gravity in m/s².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodySetting {
    Named(String),
    Gravity(f64),
}

impl Default for BodySetting {
    fn default() -> Self {
        BodySetting::Named("moon".into())
    }
}

impl BodySetting {
    pub fn resolve(&self) -> Result<BodyConstants, SimError> {
        Ok(match self {
            BodySetting::Named(n) => BodyConstants::parse(n)?,
            BodySetting::Gravity(g) => BodyConstants::new(*g)?,
        })
    }
}

/// Per-robot overrides of the scenario-wide engine, mass and power specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: RobotId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerSpec>,
}

impl RobotSpec {
    pub fn new(id: RobotId) -> Self {
        Self {
            id,
            engine: None,
            mass: None,
            power: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub laser_noise: bool,
    pub stereo_noise: bool,
    pub landing_noise: bool,
    pub scan: bool,
    pub rolling: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            laser_noise: true,
            stereo_noise: true,
            landing_noise: true,
            scan: true,
            rolling: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Operations {
    pub dwell_s: f64,
    pub scan_cost_wh: f64,
    pub rolling_speed_m_per_s: f64,
    /// Drive motor draw while rolling, on top of the housekeeping draw.
    pub rolling_drive_w: f64,
    pub acs_dv_per_hop_m_per_s: f64,
    pub landing_sigma_m: f64,
    pub ceiling_margin_m: f64,
    /// Reserve as a fraction of initial propellant when no absolute reserve
    /// is given.
    pub reserve_fraction: f64,
    /// Arc sampling step used to check flown hops against the corridor, s.
    pub arc_check_dt_s: f64,
}

impl Default for Operations {
    fn default() -> Self {
        Self {
            dwell_s: 30.0,
            scan_cost_wh: 0.5,
            rolling_speed_m_per_s: 0.1,
            rolling_drive_w: 5.0,
            acs_dv_per_hop_m_per_s: 1.0,
            landing_sigma_m: 0.5,
            ceiling_margin_m: 0.5,
            reserve_fraction: 0.05,
            arc_check_dt_s: 0.05,
        }
    }
}

/// Robot `robot` is lost just before formation leg `leg` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loss {
    pub robot: RobotId,
    pub leg: u64,
}

fn default_robots() -> Vec<RobotSpec> {
    RobotId::ALL.iter().map(|id| RobotSpec::new(*id)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub profile: ProfileSetting,
    #[serde(default = "default_robots")]
    pub robots: Vec<RobotSpec>,
    pub target_s: f64,
    pub seed: u64,
    /// Overrides `sensors.leg_length_m` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve_propellant_kg: Option<f64>,
    #[serde(default)]
    pub toggles: Toggles,
    #[serde(default)]
    pub sensors: SensorSpec,
    #[serde(default)]
    pub fix_channel: FixChannel,
    #[serde(default)]
    pub laser_fix: LaserFixMode,
    #[serde(default)]
    pub body: BodySetting,
    #[serde(default)]
    pub engine: EngineSpec,
    #[serde(default)]
    pub mass: MassBudget,
    #[serde(default)]
    pub power: PowerSpec,
    #[serde(default)]
    pub operations: Operations,
    #[serde(default)]
    pub losses: Vec<Loss>,
}

/// Per-robot specs after overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotConfig {
    pub id: RobotId,
    pub engine: EngineSpec,
    pub mass: MassBudget,
    pub power: PowerSpec,
    pub reserve_kg: f64,
}

/// A validated scenario with everything looked up.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub profile: TubeProfile,
    pub body: BodyConstants,
    pub robots: Vec<RobotConfig>,
    pub localization: LocalizationConfig,
    pub leg_length_m: f64,
}

impl Scenario {
    /// Flat preset, three default robots.
    pub fn preset(profile: &str, target_s: f64, seed: u64) -> Self {
        Self {
            name: None,
            profile: ProfileSetting::Preset(profile.into()),
            robots: default_robots(),
            target_s,
            seed,
            leg_length_m: None,
            reserve_propellant_kg: None,
            toggles: Toggles::default(),
            sensors: SensorSpec::default(),
            fix_channel: FixChannel::Auto,
            laser_fix: LaserFixMode::HeadingReferenced,
            body: BodySetting::default(),
            engine: EngineSpec::default(),
            mass: MassBudget::default(),
            power: PowerSpec::default(),
            operations: Operations::default(),
            losses: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(format!("scenario: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// All noise sources on or off at once.
    pub fn set_noise(&mut self, on: bool) {
        self.toggles.laser_noise = on;
        self.toggles.stereo_noise = on;
        self.toggles.landing_noise = on;
    }

    pub fn resolve(&self) -> Result<ResolvedScenario, SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let profile = self.profile.resolve()?;
        let body = self.body.resolve()?;

        let mut sensors = self.sensors;
        if let Some(l) = self.leg_length_m {
            sensors.leg_length_m = l;
        }
        let localization = LocalizationConfig {
            sensors,
            noise: NoiseToggles {
                laser: self.toggles.laser_noise,
                stereo: self.toggles.stereo_noise,
                landing: self.toggles.landing_noise,
            },
            channel: self.fix_channel,
            laser_fix: self.laser_fix,
            landing_sigma_m: self.operations.landing_sigma_m,
        };
        localization.validate()?;

        if self.robots.is_empty() || self.robots.len() > 3 {
            return bad(format!(
                "robots: expected 1 to 3 entries, got {}",
                self.robots.len()
            ));
        }
        let mut ids: Vec<RobotId> = self.robots.iter().map(|r| r.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.robots.len() {
            return bad("robots: duplicate ids".into());
        }

        let end = profile.length();
        if !(self.target_s >= 0.0 && self.target_s <= end - 0.5) {
            return bad(format!(
                "target_s: {} is outside the usable profile range [0, {}]",
                self.target_s,
                end - 0.5
            ));
        }

        let ops = &self.operations;
        let non_negative = [
            ("operations.dwell_s", ops.dwell_s),
            ("operations.scan_cost_wh", ops.scan_cost_wh),
            ("operations.rolling_drive_w", ops.rolling_drive_w),
            (
                "operations.acs_dv_per_hop_m_per_s",
                ops.acs_dv_per_hop_m_per_s,
            ),
            ("operations.ceiling_margin_m", ops.ceiling_margin_m),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name}: must be a non-negative number, got {v}"));
            }
        }
        for (name, v) in [
            (
                "operations.rolling_speed_m_per_s",
                ops.rolling_speed_m_per_s,
            ),
            ("operations.arc_check_dt_s", ops.arc_check_dt_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name}: must be positive, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&ops.reserve_fraction) {
            return bad(format!(
                "operations.reserve_fraction: must be in [0, 1), got {}",
                ops.reserve_fraction
            ));
        }

        let mut robots = Vec::with_capacity(self.robots.len());
        for r in &self.robots {
            let engine = r.engine.unwrap_or(self.engine);
            let mass = r.mass.unwrap_or(self.mass);
            let power = r.power.unwrap_or(self.power);
            engine.validate()?;
            mass.validate()?;
            power.validate()?;
            if mass.dry_mass_kg <= 0.0 {
                return bad(format!("robot {}: dry_mass_kg must be positive", r.id));
            }
            let reserve_kg = match self.reserve_propellant_kg {
                Some(kg) if kg >= 0.0 && kg.is_finite() => kg,
                Some(kg) => {
                    return bad(format!(
                        "reserve_propellant_kg: must be non-negative, got {kg}"
                    ))
                }
                None => ops.reserve_fraction * mass.propellant_kg,
            };
            robots.push(RobotConfig {
                id: r.id,
                engine,
                mass,
                power,
                reserve_kg,
            });
        }
        robots.sort_by_key(|r| r.id);

        for loss in &self.losses {
            if !ids.contains(&loss.robot) {
                return bad(format!(
                    "losses: robot {} is not in the scenario",
                    loss.robot
                ));
            }
        }

        Ok(ResolvedScenario {
            scenario: self.clone(),
            profile,
            body,
            robots,
            localization,
            leg_length_m: sensors.leg_length_m,
        })
    }
}
