//! Lava-tube corridor geometry.
//!
//! A tube is modelled as a vertical profile along arc length `s`: piecewise
//! linear floor and ceiling polylines, extruded sideways to a constant
//! half-width. Everything the rest of the crate needs (elevation, slope,
//! clearance and line of sight between two points) is answered exactly on
//! that polyline representation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slope above which wheeled rovers are considered unable to traverse terrain.
pub const WHEELED_SLOPE_LIMIT_DEG: f64 = 30.0;

/// Tolerance used when checking that a point lies inside the corridor.
const CORRIDOR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("arc length {s} m is outside the profile range [{min}, {max}]")]
    OutOfBounds { s: f64, min: f64, max: f64 },
    #[error("point (s = {s}, z = {z}) is outside the corridor")]
    OutsideCorridor { s: f64, z: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("unknown tube preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },
}

/// One sample of the vertical profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub s: f64,
    pub floor_z: f64,
    pub ceiling_z: f64,
}

/// A point in the vertical (s, z) plane of the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub z: f64,
}

impl ProfilePoint {
    pub fn new(s: f64, z: f64) -> Self {
        Self { s, z }
    }
}

/// Serialized form: stations as `[s, floor_z, ceiling_z]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeProfileFile {
    pub name: String,
    pub stations: Vec<[f64; 3]>,
    pub width_m: f64,
    #[serde(default)]
    pub entrance_slope_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TubeProfileFile", into = "TubeProfileFile")]
pub struct TubeProfile {
    name: String,
    stations: Vec<Station>,
    width_m: f64,
    entrance_slope_deg: f64,
}

impl TryFrom<TubeProfileFile> for TubeProfile {
    type Error = TerrainError;

    fn try_from(file: TubeProfileFile) -> Result<Self, Self::Error> {
        let stations = file
            .stations
            .iter()
            .map(|&[s, floor_z, ceiling_z]| Station {
                s,
                floor_z,
                ceiling_z,
            })
            .collect();
        TubeProfile::new(file.name, stations, file.width_m, file.entrance_slope_deg)
    }
}

impl From<TubeProfile> for TubeProfileFile {
    fn from(p: TubeProfile) -> Self {
        TubeProfileFile {
            stations: p
                .stations
                .iter()
                .map(|st| [st.s, st.floor_z, st.ceiling_z])
                .collect(),
            name: p.name,
            width_m: p.width_m,
            entrance_slope_deg: p.entrance_slope_deg,
            notes: None,
        }
    }
}

impl TubeProfile {
    pub fn new(
        name: impl Into<String>,
        stations: Vec<Station>,
        width_m: f64,
        entrance_slope_deg: f64,
    ) -> Result<Self, TerrainError> {
        let bad = |msg: String| Err(TerrainError::InvalidProfile(msg));
        if stations.len() < 2 {
            return bad("at least two stations are required".into());
        }
        if stations[0].s != 0.0 {
            return bad(format!(
                "first station must be at s = 0, got {}",
                stations[0].s
            ));
        }
        for st in &stations {
            if !(st.s.is_finite() && st.floor_z.is_finite() && st.ceiling_z.is_finite()) {
                return bad(format!("non-finite station value at s = {}", st.s));
            }
            if st.ceiling_z <= st.floor_z {
                return bad(format!("ceiling must be above floor at s = {}", st.s));
            }
        }
        if let Some(w) = stations.windows(2).find(|w| w[1].s <= w[0].s) {
            return bad(format!(
                "station s values must be strictly increasing ({} then {})",
                w[0].s, w[1].s
            ));
        }
        if !(width_m > 0.0 && width_m.is_finite()) {
            return bad(format!("width_m must be positive, got {width_m}"));
        }
        Ok(Self {
            name: name.into(),
            stations,
            width_m,
            entrance_slope_deg,
        })
    }

    /// Constant-section tube of the given length.
    pub fn flat(
        name: impl Into<String>,
        length_m: f64,
        ceiling_m: f64,
        width_m: f64,
        spacing_m: f64,
    ) -> Result<Self, TerrainError> {
        let n = (length_m / spacing_m).ceil().max(1.0) as usize;
        let stations = (0..=n)
            .map(|i| Station {
                s: (i as f64 * spacing_m).min(length_m),
                floor_z: 0.0,
                ceiling_z: ceiling_m,
            })
            .collect();
        Self::new(name, stations, width_m, 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn entrance_slope_deg(&self) -> f64 {
        self.entrance_slope_deg
    }

    pub fn length(&self) -> f64 {
        self.stations[self.stations.len() - 1].s
    }

    fn check_range(&self, s: f64) -> Result<(), TerrainError> {
        let max = self.length();
        if !(0.0..=max).contains(&s) {
            return Err(TerrainError::OutOfBounds { s, min: 0.0, max });
        }
        Ok(())
    }

    /// Index `i` of the segment `[stations[i], stations[i + 1]]` containing `s`.
    /// At an interior station the segment to the right is returned.
    fn segment_index(&self, s: f64) -> usize {
        let idx = self.stations.partition_point(|st| st.s <= s);
        idx.saturating_sub(1).min(self.stations.len() - 2)
    }

    fn interpolate(&self, s: f64, field: impl Fn(&Station) -> f64) -> f64 {
        let i = self.segment_index(s);
        let (a, b) = (&self.stations[i], &self.stations[i + 1]);
        if s == a.s {
            return field(a);
        }
        if s == b.s {
            return field(b);
        }
        let t = (s - a.s) / (b.s - a.s);
        field(a) + t * (field(b) - field(a))
    }

    pub fn floor_at(&self, s: f64) -> Result<f64, TerrainError> {
        self.check_range(s)?;
        Ok(self.interpolate(s, |st| st.floor_z))
    }

    pub fn ceiling_at(&self, s: f64) -> Result<f64, TerrainError> {
        self.check_range(s)?;
        Ok(self.interpolate(s, |st| st.ceiling_z))
    }

    pub fn clearance_at(&self, s: f64) -> Result<f64, TerrainError> {
        Ok(self.ceiling_at(s)? - self.floor_at(s)?)
    }

    /// Floor inclination in degrees of the segment containing `s`.
    pub fn slope_at(&self, s: f64) -> Result<f64, TerrainError> {
        let max = self.length();
        if !(0.0..max).contains(&s) {
            return Err(TerrainError::OutOfBounds { s, min: 0.0, max });
        }
        Ok(self.segment_slope_deg(self.segment_index(s)))
    }

    fn segment_slope_deg(&self, i: usize) -> f64 {
        let (a, b) = (&self.stations[i], &self.stations[i + 1]);
        ((b.floor_z - a.floor_z) / (b.s - a.s))
            .abs()
            .atan()
            .to_degrees()
    }

    /// Steepest floor segment overlapping the closed interval between `s0` and `s1`.
    pub fn max_slope_between(&self, s0: f64, s1: f64) -> Result<f64, TerrainError> {
        let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
        self.check_range(lo)?;
        self.check_range(hi)?;
        let first = self.segment_index(lo);
        let last = if hi > lo {
            self.segment_index_left(hi)
        } else {
            first
        };
        Ok((first..=last.max(first))
            .map(|i| self.segment_slope_deg(i))
            .fold(0.0, f64::max))
    }

    /// Like `segment_index` but at an interior station picks the segment to the left.
    fn segment_index_left(&self, s: f64) -> usize {
        let idx = self.stations.partition_point(|st| st.s < s);
        idx.saturating_sub(1).min(self.stations.len() - 2)
    }

    pub fn contains(&self, p: ProfilePoint) -> bool {
        match (self.floor_at(p.s), self.ceiling_at(p.s)) {
            (Ok(f), Ok(c)) => p.z >= f - CORRIDOR_TOL && p.z <= c + CORRIDOR_TOL,
            _ => false,
        }
    }

    fn require_inside(&self, p: ProfilePoint) -> Result<(), TerrainError> {
        self.check_range(p.s)?;
        if !self.contains(p) {
            return Err(TerrainError::OutsideCorridor { s: p.s, z: p.z });
        }
        Ok(())
    }

    /// True iff every point strictly between `p1` and `p2` lies strictly
    /// between floor and ceiling.
    ///
    /// Both margins (segment minus floor, ceiling minus segment) are piecewise
    /// linear in `s` with breakpoints at stations, so checking the interior
    /// stations plus the degenerate no-breakpoint case is exact.
    pub fn line_of_sight(&self, p1: ProfilePoint, p2: ProfilePoint) -> Result<bool, TerrainError> {
        self.require_inside(p1)?;
        self.require_inside(p2)?;
        let (a, b) = if p1.s <= p2.s { (p1, p2) } else { (p2, p1) };
        if a.s == b.s {
            // Vertical or degenerate segment: interior points lie strictly
            // between two corridor points at the same s.
            return Ok(true);
        }
        let seg_z = |s: f64| a.z + (b.z - a.z) * (s - a.s) / (b.s - a.s);
        let mut interior = self
            .stations
            .iter()
            .filter(|st| st.s > a.s && st.s < b.s)
            .peekable();
        if interior.peek().is_none() {
            let floor_margin = (
                a.z - self.interpolate(a.s, |st| st.floor_z),
                b.z - self.interpolate(b.s, |st| st.floor_z),
            );
            let ceil_margin = (
                self.interpolate(a.s, |st| st.ceiling_z) - a.z,
                self.interpolate(b.s, |st| st.ceiling_z) - b.z,
            );
            let touching = |m: (f64, f64)| m.0 <= 0.0 && m.1 <= 0.0;
            return Ok(!touching(floor_margin) && !touching(ceil_margin));
        }
        Ok(interior.all(|st| {
            let z = seg_z(st.s);
            z > st.floor_z && z < st.ceiling_z
        }))
    }

    pub fn preset(name: &str) -> Result<Self, TerrainError> {
        let presets = preset_table();
        presets
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| TerrainError::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
    }
}

pub const PRESET_NAMES: [&str; 3] = ["flat_tube", "mare_ingenii_pit", "zigzag_tube"];

const PRESET_DATA: &str = include_str!("../data/tube_presets.json");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetEntry {
    name: String,
    notes: String,
    width_m: f64,
    #[serde(default)]
    entrance_slope_deg: f64,
    spacing_m: f64,
    /// Knots of the floor polyline as `[s, z]`; resampled at `spacing_m`.
    floor: Vec<[f64; 2]>,
    ceiling: Vec<[f64; 2]>,
}

fn knot_interp(knots: &[[f64; 2]], s: f64) -> f64 {
    let i = knots
        .partition_point(|k| k[0] <= s)
        .clamp(1, knots.len() - 1);
    let ([s0, z0], [s1, z1]) = (knots[i - 1], knots[i]);
    if s >= s1 {
        return z1;
    }
    z0 + (z1 - z0) * (s - s0) / (s1 - s0)
}

/// All presets with descriptive notes, in the order of [`PRESET_NAMES`].
pub fn preset_catalog() -> Vec<(TubeProfile, String)> {
    let entries: Vec<PresetEntry> =
        serde_json::from_str(PRESET_DATA).expect("bundled tube presets are valid JSON");
    entries
        .into_iter()
        .map(|e| {
            let end = e.floor.last().expect("preset floor has knots")[0];
            let mut grid: Vec<f64> = Vec::new();
            let mut s = 0.0;
            while s < end {
                grid.push(s);
                s += e.spacing_m;
            }
            grid.push(end);
            // Knots must be stations too, so kinks are represented exactly.
            grid.extend(e.floor.iter().chain(&e.ceiling).map(|k| k[0]));
            grid.sort_by(f64::total_cmp);
            grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let stations = grid
                .into_iter()
                .map(|s| Station {
                    s,
                    floor_z: knot_interp(&e.floor, s),
                    ceiling_z: knot_interp(&e.ceiling, s),
                })
                .collect();
            let profile = TubeProfile::new(e.name, stations, e.width_m, e.entrance_slope_deg)
                .expect("bundled tube presets are valid");
            (profile, e.notes)
        })
        .collect()
}

fn preset_table() -> Vec<TubeProfile> {
    preset_catalog().into_iter().map(|(p, _)| p).collect()
}
