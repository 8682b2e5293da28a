use serde::Serialize;

use crate::hopplan::Constraint;
use crate::navloc::{FixKind, FixQuality, MeasurementKind, RobotId};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    Hop {
        from_s: f64,
        from_z: f64,
        to_s: f64,
        to_z: f64,
        launch_angle_deg: f64,
        dv_total_mps: f64,
        flight_time_s: f64,
        apex_z: f64,
        propellant_main_kg: f64,
        propellant_acs_kg: f64,
        propellant_remaining_kg: f64,
        /// 0 for a full leg, 1 for half, 2 for quarter length.
        shortened: u8,
    },
    Land {
        s: f64,
        lateral: f64,
        z: f64,
    },
    Measure {
        measurement: MeasurementKind,
        observer: RobotId,
        target: RobotId,
        range_m: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        bearing_rad: Option<f64>,
    },
    Trilaterated {
        fix: FixKind,
        est_x: f64,
        est_y: f64,
        cov_trace_m2: f64,
    },
    DeadReckoned {
        est_x: f64,
        est_y: f64,
        cov_trace_m2: f64,
    },
    GeometryWarning {
        quality: FixQuality,
        h_over_d: f64,
    },
    Scan {
        newly_observed: usize,
        battery_wh: f64,
    },
    /// Housekeeping draw (avionics and lights) over an interval.
    Power {
        duration_s: f64,
        battery_wh: f64,
        battery_remaining_wh: f64,
    },
    Blocked {
        at_s: f64,
        toward_s: f64,
        binding: Option<Constraint>,
        reason: String,
    },
    Rolled {
        from_s: f64,
        to_s: f64,
        distance_m: f64,
        duration_s: f64,
        battery_wh: f64,
    },
    Depleted {
        reason: String,
    },
    Lost,
    Arrived {
        target_s: f64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Hop { .. } => "Hop",
            EventKind::Land { .. } => "Land",
            EventKind::Measure { .. } => "Measure",
            EventKind::Trilaterated { .. } => "Trilaterated",
            EventKind::DeadReckoned { .. } => "DeadReckoned",
            EventKind::GeometryWarning { .. } => "GeometryWarning",
            EventKind::Scan { .. } => "Scan",
            EventKind::Power { .. } => "Power",
            EventKind::Blocked { .. } => "Blocked",
            EventKind::Rolled { .. } => "Rolled",
            EventKind::Depleted { .. } => "Depleted",
            EventKind::Lost => "Lost",
            EventKind::Arrived { .. } => "Arrived",
        }
    }

    /// Propellant drawn by this event, kg.
    pub fn propellant_kg(&self) -> f64 {
        match self {
            EventKind::Hop {
                propellant_main_kg,
                propellant_acs_kg,
                ..
            } => propellant_main_kg + propellant_acs_kg,
            _ => 0.0,
        }
    }

    /// Battery energy drawn by this event, Wh.
    pub fn battery_wh(&self) -> f64 {
        match self {
            EventKind::Scan { battery_wh, .. }
            | EventKind::Power { battery_wh, .. }
            | EventKind::Rolled { battery_wh, .. } => *battery_wh,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotId>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, t_s: f64, robot: Option<RobotId>, kind: EventKind) {
        debug_assert!(
            self.events.last().is_none_or(|e| e.t_s <= t_s),
            "event time went backwards"
        );
        self.events.push(Event { t_s, robot, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, name: &str) -> usize {
        self.events.iter().filter(|e| e.kind.name() == name).count()
    }

    pub fn for_robot(&self, id: RobotId) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.robot == Some(id))
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_shape() {
        let mut log = EventLog::default();
        log.push(
            0.0,
            Some(RobotId::A),
            EventKind::Land {
                s: 1.0,
                lateral: 0.0,
                z: 0.15,
            },
        );
        log.push(1.5, None, EventKind::Arrived { target_s: 10.0 });
        let text = log.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"t_s":0.0,"robot":"A","kind":"Land","s":1.0,"lateral":0.0,"z":0.15}"#
        );
        assert_eq!(lines[1], r#"{"t_s":1.5,"kind":"Arrived","target_s":10.0}"#);
        assert_eq!(log.count("Land"), 1);
    }
}
