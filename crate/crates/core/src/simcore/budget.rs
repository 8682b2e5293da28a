use std::fmt::Write as _;

use serde::Serialize;

use super::scenario::ResolvedScenario;
use super::SimError;
use crate::hopplan::hop_sequence_range;
use crate::propulsion::{
    battery_endurance, dv_capacity, hover_budget, hover_propellant_for, tank_fit_check,
    technology_presets, technology_report, TechnologyRow, NOMINAL_MASS_TABLE,
    NOMINAL_TABULATED_TOTAL_KG,
};

/// Claimed mission range, km.
pub const CLAIMED_RANGE_KM: f64 = 5.0;
/// Claimed flight time, hours.
pub const CLAIMED_FLY_TIME_HR: f64 = 0.7;
/// Outer diameter of the robot body, m.
pub const BODY_DIAMETER_M: f64 = 0.30;
/// Relative gap beyond which a computed value is flagged against its claim.
pub const FLAG_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub quantity: String,
    pub unit: &'static str,
    pub computed: f64,
    pub claimed: Option<f64>,
    pub delta: Option<f64>,
    pub flagged: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl BudgetRow {
    fn new(quantity: &str, unit: &'static str, computed: f64, claimed: Option<f64>) -> Self {
        let delta = claimed.map(|c| computed - c);
        let flagged = claimed.is_some_and(|c| {
            (computed - c).abs() > FLAG_TOLERANCE * c.abs().max(f64::MIN_POSITIVE)
        });
        let note = if flagged {
            "DISCREPANCY".to_string()
        } else {
            String::new()
        };
        Self {
            quantity: quantity.to_string(),
            unit,
            computed,
            claimed,
            delta,
            flagged,
            note,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
    pub technology: Vec<TechnologyRow>,
}

impl BudgetReport {
    pub fn row(&self, quantity: &str) -> Option<&BudgetRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<36} {:>14} {:>14} {:>14} {:<6} note",
            "quantity", "computed", "claimed", "delta", "unit"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<36} {:>14} {:>14} {:>14} {:<6} {}",
                r.quantity,
                format!("{:.6}", r.computed),
                fmt(r.claimed),
                fmt(r.delta),
                r.unit,
                r.note
            );
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<40} {:>10} {:>10} {:>12} {:>12}",
            "technology", "range_km", "claimed_km", "fly_time_hr", "claimed_hr"
        );
        for t in &self.technology {
            let _ = writeln!(
                out,
                "{:<40} {:>10.3} {:>10} {:>12.3} {:>12.3}",
                t.name,
                t.computed_range_km,
                t.claimed_range_label,
                t.computed_fly_time_hr,
                t.claimed_fly_time_hr
            );
        }
        out
    }
}

/// Performance implied by the first robot's engine, mass and power specs,
/// set beside the published figures.
pub fn budget_report(cfg: &ResolvedScenario) -> Result<BudgetReport, SimError> {
    let robot = cfg
        .robots
        .first()
        .ok_or_else(|| SimError::Config("scenario has no robots".into()))?;
    let (engine, mass, power, body) = (&robot.engine, &robot.mass, &robot.power, cfg.body);

    let dv = dv_capacity(engine, mass)?;
    let range_100 = hop_sequence_range(dv, 100.0, body)? / 1000.0;
    let range_leg = hop_sequence_range(dv, cfg.leg_length_m, body)? / 1000.0;
    let hover = hover_budget(engine, mass, body.g)?;
    let hover_hr = hover.endurance_s / 3600.0;
    let needed = hover_propellant_for(
        engine,
        mass.total_kg(),
        body.g,
        CLAIMED_FLY_TIME_HR * 3600.0,
    )?;
    let tank = tank_fit_check(engine, mass.propellant_kg, BODY_DIAMETER_M)?;
    let table_sum: f64 = NOMINAL_MASS_TABLE.iter().map(|l| l.mass_kg).sum();

    let mut rows = vec![
        BudgetRow::new("dv_capacity", "m/s", dv, None),
        BudgetRow::new("range_100m_hops", "km", range_100, Some(CLAIMED_RANGE_KM)),
        BudgetRow::new(
            &format!("range_{}m_hops", cfg.leg_length_m),
            "km",
            range_leg,
            Some(CLAIMED_RANGE_KM),
        ),
        BudgetRow::new("hover_endurance", "s", hover.endurance_s, None),
        BudgetRow::new("fly_time", "hr", hover_hr, Some(CLAIMED_FLY_TIME_HR)),
        BudgetRow::new(
            "propellant_for_claimed_fly_time",
            "kg",
            needed,
            Some(mass.propellant_kg),
        )
        .with_note(if needed > mass.propellant_kg {
            "DISCREPANCY: exceeds the carried propellant"
        } else {
            ""
        }),
        BudgetRow::new("battery_endurance", "hr", battery_endurance(power)?, None),
        BudgetRow::new("tank_volume", "m3", tank.volume_m3, Some(tank.available_m3)).with_note(
            if tank.fits {
                "fits"
            } else {
                "DISCREPANCY: does not fit"
            },
        ),
        BudgetRow::new(
            "mass_table_sum",
            "kg",
            table_sum,
            Some(NOMINAL_TABULATED_TOTAL_KG),
        ),
    ];
    // The tank and required-propellant rows compare against capacities, not claims.
    for r in rows
        .iter_mut()
        .filter(|r| r.quantity == "tank_volume" || r.quantity == "propellant_for_claimed_fly_time")
    {
        r.flagged = r.note.starts_with("DISCREPANCY");
    }
    let mass_row = rows.last_mut().expect("rows are non-empty");
    if (mass_row.computed - NOMINAL_TABULATED_TOTAL_KG).abs() > 1e-9 {
        mass_row.flagged = true;
        mass_row.note = "DISCREPANCY: subsystem lines do not sum to the tabulated total".into();
    }

    let technology = technology_report(&technology_presets(), engine, mass, 100.0, body)?;
    Ok(BudgetReport { rows, technology })
}
