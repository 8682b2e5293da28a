//! Mass and energy bookkeeping for a hopping robot: rocket-equation delta-v,
//! propellant sizing, hover endurance, attitude-control allowance, battery
//! endurance and tank volume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hopplan::{hop_sequence_range, BodyConstants};

/// Standard gravity used to convert specific impulse to exhaust velocity.
pub const G0: f64 = 9.80665;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropulsionError {
    #[error("propellant mass {propellant_kg} kg must be below total mass {total_kg} kg")]
    Nonphysical { propellant_kg: f64, total_kg: f64 },
    #[error("delta-v must be non-negative, got {0} m/s")]
    NegativeDeltaV(f64),
    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("total electrical draw must be positive")]
    ZeroDraw,
}

fn require_positive(what: &'static str, value: f64) -> Result<(), PropulsionError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PropulsionError::InvalidParameter { what, value })
    }
}

fn require_non_negative(what: &'static str, value: f64) -> Result<(), PropulsionError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PropulsionError::InvalidParameter { what, value })
    }
}

/// Main engine and warm-gas attitude thrusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSpec {
    pub isp_main_s: f64,
    pub isp_acs_s: f64,
    pub g0: f64,
    /// Oxidizer-to-fuel mass ratio.
    pub of_ratio: f64,
    /// RP-1 density, kg/m³.
    pub rho_fuel: f64,
    /// 50 wt% hydrogen peroxide solution density, kg/m³.
    pub rho_oxidizer: f64,
}

impl Default for EngineSpec {
    fn default() -> Self {
        Self {
            isp_main_s: 330.0,
            isp_acs_s: 180.0,
            g0: G0,
            of_ratio: 7.0,
            rho_fuel: 700.0,
            rho_oxidizer: 1190.0,
        }
    }
}

impl EngineSpec {
    pub fn validate(&self) -> Result<(), PropulsionError> {
        require_positive("isp_main_s", self.isp_main_s)?;
        require_positive("isp_acs_s", self.isp_acs_s)?;
        require_positive("g0", self.g0)?;
        require_positive("of_ratio", self.of_ratio)?;
        require_positive("rho_fuel", self.rho_fuel)?;
        require_positive("rho_oxidizer", self.rho_oxidizer)?;
        if self.isp_acs_s > self.isp_main_s {
            return Err(PropulsionError::InvalidParameter {
                what: "isp_acs_s (must not exceed isp_main_s)",
                value: self.isp_acs_s,
            });
        }
        Ok(())
    }

    fn exhaust_velocity(&self, use_acs: bool) -> f64 {
        let isp = if use_acs {
            self.isp_acs_s
        } else {
            self.isp_main_s
        };
        isp * self.g0
    }
}

/// Wet/dry mass split of one robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassBudget {
    /// Structure, avionics, power, sensors, payload and engine dry mass.
    pub dry_mass_kg: f64,
    pub propellant_kg: f64,
}

impl Default for MassBudget {
    /// 3.0 kg robot carrying 1.0 kg of propellant.
    fn default() -> Self {
        Self {
            dry_mass_kg: 2.0,
            propellant_kg: 1.0,
        }
    }
}

impl MassBudget {
    pub fn new(dry_mass_kg: f64, propellant_kg: f64) -> Result<Self, PropulsionError> {
        let b = Self {
            dry_mass_kg,
            propellant_kg,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn total_kg(&self) -> f64 {
        self.dry_mass_kg + self.propellant_kg
    }

    pub fn validate(&self) -> Result<(), PropulsionError> {
        require_non_negative("dry_mass_kg", self.dry_mass_kg)?;
        require_non_negative("propellant_kg", self.propellant_kg)?;
        require_positive("total mass", self.total_kg())
    }
}

/// One row of the subsystem mass table for the nominal robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassLine {
    pub subsystem: &'static str,
    pub mass_kg: f64,
}

/// Subsystem masses of the nominal robot as tabulated, plus the tabulated total.
pub const NOMINAL_MASS_TABLE: [MassLine; 5] = [
    MassLine {
        subsystem: "Propulsion",
        mass_kg: 1.2,
    },
    MassLine {
        subsystem: "Computer, Comms, Electronics",
        mass_kg: 0.2,
    },
    MassLine {
        subsystem: "Power",
        mass_kg: 0.3,
    },
    MassLine {
        subsystem: "Stereo Camera, Laser Ranger",
        mass_kg: 0.3,
    },
    MassLine {
        subsystem: "Payload",
        mass_kg: 1.2,
    },
];
pub const NOMINAL_TABULATED_TOTAL_KG: f64 = 3.0;
pub const NOMINAL_MAX_TOTAL_KG: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSpec {
    pub battery_mass_kg: f64,
    pub specific_energy_wh_per_kg: f64,
    pub avionics_draw_w: f64,
    pub lights_draw_w: f64,
}

impl Default for PowerSpec {
    fn default() -> Self {
        Self {
            battery_mass_kg: 0.3,
            specific_energy_wh_per_kg: 700.0,
            avionics_draw_w: 10.0,
            lights_draw_w: 5.0,
        }
    }
}

impl PowerSpec {
    pub fn capacity_wh(&self) -> f64 {
        self.battery_mass_kg * self.specific_energy_wh_per_kg
    }

    pub fn total_draw_w(&self) -> f64 {
        self.avionics_draw_w + self.lights_draw_w
    }

    pub fn validate(&self) -> Result<(), PropulsionError> {
        require_non_negative("battery_mass_kg", self.battery_mass_kg)?;
        require_non_negative("specific_energy_wh_per_kg", self.specific_energy_wh_per_kg)?;
        require_non_negative("avionics_draw_w", self.avionics_draw_w)?;
        require_non_negative("lights_draw_w", self.lights_draw_w)
    }
}

/// Delta-v available from the main engine when burning all propellant.
pub fn dv_capacity(engine: &EngineSpec, budget: &MassBudget) -> Result<f64, PropulsionError> {
    let total = budget.total_kg();
    if budget.propellant_kg >= total {
        return Err(PropulsionError::Nonphysical {
            propellant_kg: budget.propellant_kg,
            total_kg: total,
        });
    }
    Ok(engine.exhaust_velocity(false) * (total / (total - budget.propellant_kg)).ln())
}

/// Propellant burned to change velocity by `dv` starting from mass `m0`.
pub fn propellant_for_dv(
    engine: &EngineSpec,
    m0: f64,
    dv: f64,
    use_acs: bool,
) -> Result<f64, PropulsionError> {
    if dv < 0.0 || dv.is_nan() {
        return Err(PropulsionError::NegativeDeltaV(dv));
    }
    require_positive("initial mass", m0)?;
    // exp_m1 keeps full precision for the tiny burns of short hops.
    Ok(-m0 * (-dv / engine.exhaust_velocity(use_acs)).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoverBudget {
    pub endurance_s: f64,
    pub fuel_rate_initial_kg_per_s: f64,
}

/// Hover endurance burning all propellant against surface gravity `g`.
pub fn hover_budget(
    engine: &EngineSpec,
    budget: &MassBudget,
    g: f64,
) -> Result<HoverBudget, PropulsionError> {
    require_positive("surface gravity", g)?;
    let m0 = budget.total_kg();
    let mf = budget.dry_mass_kg;
    if mf <= 0.0 {
        return Err(PropulsionError::Nonphysical {
            propellant_kg: budget.propellant_kg,
            total_kg: m0,
        });
    }
    let ve = engine.exhaust_velocity(false);
    Ok(HoverBudget {
        endurance_s: ve / g * (m0 / mf).ln(),
        fuel_rate_initial_kg_per_s: m0 * g / ve,
    })
}

/// Propellant needed to hover for `duration_s` starting at mass `m0`.
pub fn hover_propellant_for(
    engine: &EngineSpec,
    m0: f64,
    g: f64,
    duration_s: f64,
) -> Result<f64, PropulsionError> {
    require_positive("surface gravity", g)?;
    require_positive("initial mass", m0)?;
    require_non_negative("hover duration", duration_s)?;
    Ok(-m0 * (-duration_s * g / engine.exhaust_velocity(false)).exp_m1())
}

/// Warm-gas attitude-control propellant charged once per hop.
pub fn acs_allowance(engine: &EngineSpec, m: f64, dv_per_hop: f64) -> Result<f64, PropulsionError> {
    propellant_for_dv(engine, m, dv_per_hop, true)
}

/// Battery endurance in hours at constant draw.
pub fn battery_endurance(power: &PowerSpec) -> Result<f64, PropulsionError> {
    let draw = power.total_draw_w();
    if draw <= 0.0 {
        return Err(PropulsionError::ZeroDraw);
    }
    Ok(power.capacity_wh() / draw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TankFit {
    pub volume_m3: f64,
    pub available_m3: f64,
    pub fits: bool,
}

/// Propellant volume against the lower half of a sphere of the given diameter.
pub fn tank_fit_check(
    engine: &EngineSpec,
    propellant_kg: f64,
    sphere_diameter_m: f64,
) -> Result<TankFit, PropulsionError> {
    require_non_negative("propellant_kg", propellant_kg)?;
    require_positive("sphere_diameter_m", sphere_diameter_m)?;
    let of = engine.of_ratio;
    let oxidizer = propellant_kg * of / (1.0 + of);
    let fuel = propellant_kg / (1.0 + of);
    let volume_m3 = oxidizer / engine.rho_oxidizer + fuel / engine.rho_fuel;
    let r = sphere_diameter_m / 2.0;
    let available_m3 = 2.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    Ok(TankFit {
        volume_m3,
        available_m3,
        fits: volume_m3 <= available_m3,
    })
}

/// One power/propulsion option as tabulated in the technology comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyPreset {
    pub name: String,
    /// Specific energy as printed in the table (may be a bound such as ">>> 10^6").
    pub specific_energy_label: String,
    pub specific_energy_wh_per_kg: f64,
    pub mass_kg: f64,
    pub waste_heat_w: f64,
    pub claimed_fly_time_hr: f64,
    pub claimed_range_label: String,
    pub claimed_range_km: f64,
    /// Whether the option can fly or hop on rocket propulsion.
    pub propulsive: bool,
}

const TECHNOLOGY_DATA: &str = include_str!("../data/technology_presets.json");

pub fn technology_presets() -> Vec<TechnologyPreset> {
    serde_json::from_str(TECHNOLOGY_DATA).expect("bundled technology presets are valid JSON")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechnologyRow {
    pub name: String,
    pub computed_range_km: f64,
    pub claimed_range_km: f64,
    pub claimed_range_label: String,
    pub computed_fly_time_hr: f64,
    pub claimed_fly_time_hr: f64,
}

/// Achievable hop range and hover time for each option beside the tabulated
/// claims. Non-propulsive options get zero for both computed columns.
pub fn technology_report(
    presets: &[TechnologyPreset],
    engine: &EngineSpec,
    budget: &MassBudget,
    hop_length_m: f64,
    body: BodyConstants,
) -> Result<Vec<TechnologyRow>, PropulsionError> {
    require_positive("hop length", hop_length_m)?;
    presets
        .iter()
        .map(|p| {
            let (range_km, fly_hr) = if p.propulsive {
                let dv = dv_capacity(engine, budget)?;
                let range = hop_sequence_range(dv, hop_length_m, body).map_err(|_| {
                    PropulsionError::InvalidParameter {
                        what: "hop length",
                        value: hop_length_m,
                    }
                })?;
                let hover = hover_budget(engine, budget, body.g)?;
                (range / 1000.0, hover.endurance_s / 3600.0)
            } else {
                (0.0, 0.0)
            };
            Ok(TechnologyRow {
                name: p.name.clone(),
                computed_range_km: range_km,
                claimed_range_km: p.claimed_range_km,
                claimed_range_label: p.claimed_range_label.clone(),
                computed_fly_time_hr: fly_hr,
                claimed_fly_time_hr: p.claimed_fly_time_hr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn budget(total: f64, prop: f64) -> MassBudget {
        MassBudget::new(total - prop, prop).unwrap()
    }

    #[test]
    fn dv_capacity_examples() {
        let e = EngineSpec::default();
        assert_eq!(dv_capacity(&e, &budget(3.0, 0.0)).unwrap(), 0.0);
        assert_relative_eq!(
            dv_capacity(&e, &budget(3.0, 1.0)).unwrap(),
            1_312.163_952_801_547,
            max_relative = 1e-12
        );
        let acs = EngineSpec {
            isp_main_s: 180.0,
            ..e
        };
        assert_relative_eq!(
            dv_capacity(&acs, &budget(3.0, 1.0)).unwrap(),
            715.725_792_437_207_4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn dv_capacity_rejects_all_propellant() {
        let b = MassBudget {
            dry_mass_kg: 0.0,
            propellant_kg: 1.0,
        };
        assert!(matches!(
            dv_capacity(&EngineSpec::default(), &b),
            Err(PropulsionError::Nonphysical { .. })
        ));
    }

    #[test]
    fn propellant_for_dv_examples() {
        let e = EngineSpec::default();
        assert_eq!(propellant_for_dv(&e, 3.0, 0.0, false).unwrap(), 0.0);
        assert!((propellant_for_dv(&e, 3.0, 1312.2, false).unwrap() - 1.0).abs() < 5e-4);
        let exact = propellant_for_dv(&e, 3.0, 1_312.163_952_801_547, false).unwrap();
        assert!((exact - 1.0).abs() < 1e-6);
        assert_relative_eq!(
            propellant_for_dv(&e, 3.0, 25.455_844_122_715_71, false).unwrap(),
            0.023_505_375_084_694_66,
            max_relative = 1e-10
        );
        assert!(matches!(
            propellant_for_dv(&e, 3.0, -1.0, false),
            Err(PropulsionError::NegativeDeltaV(_))
        ));
    }

    #[test]
    fn hover_examples() {
        let e = EngineSpec::default();
        let none = hover_budget(&e, &budget(3.0, 0.0), 1.62).unwrap();
        assert_eq!(none.endurance_s, 0.0);
        let h = hover_budget(&e, &budget(3.0, 1.0), 1.62).unwrap();
        assert_relative_eq!(h.endurance_s, 809.977_748_642_930_2, max_relative = 1e-12);
        assert_relative_eq!(
            h.fuel_rate_initial_kg_per_s,
            1.501_763_877_294_767e-3,
            max_relative = 1e-12
        );
        let need = hover_propellant_for(&e, 3.0, 1.62, 0.7 * 3600.0).unwrap();
        assert_relative_eq!(need, 2.150_297_820_760_445, max_relative = 1e-12);
        assert!(hover_budget(&e, &budget(3.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn acs_examples() {
        let e = EngineSpec::default();
        assert_eq!(acs_allowance(&e, 3.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            acs_allowance(&e, 3.0, 1.0).unwrap(),
            1.699_045_713_839_695e-3,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            acs_allowance(&e, 3.0, 2.0).unwrap(),
            3.397_129_175_566_818e-3,
            max_relative = 1e-12
        );
        // Per kilogram of vehicle the allowance is 5.665e-4 kg for 1 m/s.
        assert_relative_eq!(
            acs_allowance(&e, 1.0, 1.0).unwrap(),
            5.665e-4,
            max_relative = 1e-3
        );
    }

    #[test]
    fn battery_examples() {
        let lights_off = PowerSpec {
            lights_draw_w: 0.0,
            ..PowerSpec::default()
        };
        assert_relative_eq!(
            battery_endurance(&lights_off).unwrap(),
            21.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            battery_endurance(&PowerSpec::default()).unwrap(),
            14.0,
            max_relative = 1e-12
        );
        let empty = PowerSpec {
            battery_mass_kg: 0.0,
            ..PowerSpec::default()
        };
        assert_eq!(battery_endurance(&empty).unwrap(), 0.0);
        let dark = PowerSpec {
            avionics_draw_w: 0.0,
            lights_draw_w: 0.0,
            ..PowerSpec::default()
        };
        assert_eq!(battery_endurance(&dark), Err(PropulsionError::ZeroDraw));
    }

    #[test]
    fn tank_examples() {
        let e = EngineSpec::default();
        let zero = tank_fit_check(&e, 0.0, 0.30).unwrap();
        assert_eq!(zero.volume_m3, 0.0);
        assert!(zero.fits);
        let one = tank_fit_check(&e, 1.0, 0.30).unwrap();
        assert_relative_eq!(
            one.volume_m3,
            9.138_655_462_184_874e-4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            one.available_m3,
            7.068_583_470_577_035e-3,
            max_relative = 1e-12
        );
        assert!(one.fits);
        assert!(!tank_fit_check(&e, 10.0, 0.30).unwrap().fits);
    }

    #[test]
    fn technology_rows() {
        let presets = technology_presets();
        assert_eq!(presets.len(), 4);
        let rows = technology_report(
            &presets,
            &EngineSpec::default(),
            &MassBudget::default(),
            100.0,
            BodyConstants::MOON,
        )
        .unwrap();
        let proposed = &rows[0];
        assert!((proposed.computed_range_km - 5.1).abs() < 1e-9);
        assert_eq!(proposed.claimed_range_km, 5.0);
        let lisocl2 = rows.iter().find(|r| r.name == "LiSOCl2").unwrap();
        assert_eq!(lisocl2.computed_range_km, 0.0);
        assert_eq!(lisocl2.claimed_range_km, 0.5);
        assert!(technology_report(
            &[],
            &EngineSpec::default(),
            &MassBudget::default(),
            100.0,
            BodyConstants::MOON
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn nominal_mass_table_sum() {
        let sum: f64 = NOMINAL_MASS_TABLE.iter().map(|l| l.mass_kg).sum();
        // The listed rows add up to 3.2 kg against a stated total of 3.0 kg.
        assert!((sum - 3.2).abs() < 1e-12);
        assert!(MassBudget::default().total_kg() <= NOMINAL_MAX_TOTAL_KG);
    }

    #[test]
    fn engine_validation() {
        assert!(EngineSpec::default().validate().is_ok());
        let bad = EngineSpec {
            isp_acs_s: 400.0,
            ..EngineSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = EngineSpec {
            rho_fuel: 0.0,
            ..EngineSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn rocket_equation_round_trip(total in 0.5f64..50.0, frac in 0.001f64..0.9, isp in 100.0f64..450.0) {
            let e = EngineSpec { isp_main_s: isp, ..EngineSpec::default() };
            let b = budget(total, total * frac);
            let dv = dv_capacity(&e, &b).unwrap();
            let back = propellant_for_dv(&e, total, dv, false).unwrap();
            prop_assert!((back - b.propellant_kg).abs() <= 1e-9 * b.propellant_kg);
        }

        #[test]
        fn dv_capacity_monotone(total in 1.0f64..10.0, frac in 0.01f64..0.8, bump in 0.001f64..0.05, isp in 100.0f64..400.0) {
            let e = EngineSpec { isp_main_s: isp, ..EngineSpec::default() };
            let lo = dv_capacity(&e, &budget(total, total * frac)).unwrap();
            let more_prop = MassBudget::new(total - total * frac, total * (frac + bump)).unwrap();
            prop_assert!(dv_capacity(&e, &more_prop).unwrap() > lo);
            let better = EngineSpec { isp_main_s: isp + 1.0, ..e };
            prop_assert!(dv_capacity(&better, &budget(total, total * frac)).unwrap() > lo);
        }

        #[test]
        fn hover_scales_inverse_with_gravity(g in 0.1f64..10.0, frac in 0.01f64..0.8) {
            let e = EngineSpec::default();
            let b = budget(3.0, 3.0 * frac);
            let base = hover_budget(&e, &b, 1.0).unwrap().endurance_s;
            let scaled = hover_budget(&e, &b, g).unwrap().endurance_s * g;
            prop_assert!((scaled - base).abs() <= 1e-9 * base);
        }

        #[test]
        fn tank_volume_linear(p in 0.0f64..20.0, k in 0.1f64..5.0) {
            let e = EngineSpec::default();
            let v1 = tank_fit_check(&e, p, 0.3).unwrap().volume_m3;
            let vk = tank_fit_check(&e, p * k, 0.3).unwrap().volume_m3;
            prop_assert!((vk - k * v1).abs() <= 1e-12 * (1.0 + vk));
        }
    }
}
