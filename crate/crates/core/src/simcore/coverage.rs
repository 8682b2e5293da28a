use std::fmt::Write as _;

use serde::Serialize;

use crate::hopplan::CorridorPoint;
use crate::navloc::SENSOR_HEIGHT_M;
use crate::terrain::{ProfilePoint, TerrainError, TubeProfile};

/// Which profile stations have been seen by a scan, and when first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageMap {
    station_s: Vec<f64>,
    first_seen: Vec<Option<f64>>,
}

impl CoverageMap {
    pub fn new(profile: &TubeProfile) -> Self {
        let station_s: Vec<f64> = profile.stations().iter().map(|st| st.s).collect();
        let n = station_s.len();
        Self {
            station_s,
            first_seen: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.station_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.station_s.is_empty()
    }

    pub fn observed_count(&self) -> usize {
        self.first_seen.iter().filter(|t| t.is_some()).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.observed_count() as f64 / self.len() as f64
        }
    }

    pub fn is_observed(&self, index: usize) -> bool {
        self.first_seen[index].is_some()
    }

    pub fn first_seen(&self, index: usize) -> Option<f64> {
        self.first_seen[index]
    }

    pub fn station_s(&self) -> &[f64] {
        &self.station_s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("station_s,observed,t_first\n");
        for (s, t) in self.station_s.iter().zip(&self.first_seen) {
            match t {
                Some(t) => writeln!(out, "{s},true,{t}"),
                None => writeln!(out, "{s},false,"),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Stations a sensor at `from` can see: within `max_range_m` in the (s, z)
/// plane with a clear line to the floor point (lifted by the sensor height).
pub fn visible_stations(
    profile: &TubeProfile,
    from: &CorridorPoint,
    max_range_m: f64,
) -> Result<Vec<usize>, TerrainError> {
    let eye = ProfilePoint::new(from.s, from.z);
    let mut out = Vec::new();
    for (i, st) in profile.stations().iter().enumerate() {
        let target = ProfilePoint::new(
            st.s,
            st.floor_z + SENSOR_HEIGHT_M.min(0.5 * (st.ceiling_z - st.floor_z)),
        );
        let d = (target.s - eye.s).hypot(target.z - eye.z);
        if d <= max_range_m && profile.line_of_sight(eye, target)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Marks everything visible from `from` at time `t_s`; returns how many
/// stations were newly observed.
pub fn scan(
    coverage: &mut CoverageMap,
    profile: &TubeProfile,
    from: &CorridorPoint,
    max_range_m: f64,
    t_s: f64,
) -> Result<usize, TerrainError> {
    let mut fresh = 0;
    for i in visible_stations(profile, from, max_range_m)? {
        if coverage.first_seen[i].is_none() {
            coverage.first_seen[i] = Some(t_s);
            fresh += 1;
        }
    }
    Ok(fresh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fine_los(profile: &TubeProfile, a: ProfilePoint, b: ProfilePoint) -> bool {
        // Brute-force oracle: sample the segment densely.
        let n = 20_000;
        (1..n).all(|k| {
            let u = k as f64 / n as f64;
            let s = a.s + u * (b.s - a.s);
            let z = a.z + u * (b.z - a.z);
            z > profile.floor_at(s).unwrap() && z < profile.ceiling_at(s).unwrap()
        })
    }

    #[test]
    fn flat_mid_corridor_marks_plus_minus_70() {
        let p = TubeProfile::preset("flat_tube").unwrap();
        let mut cov = CoverageMap::new(&p);
        let at = CorridorPoint::new(500.0, 0.0, SENSOR_HEIGHT_M);
        scan(&mut cov, &p, &at, 70.0, 3.0).unwrap();
        for (i, s) in cov.station_s().to_vec().iter().enumerate() {
            assert_eq!(cov.is_observed(i), (s - 500.0).abs() <= 70.0, "station {s}");
        }
        let before = cov.clone();
        assert_eq!(scan(&mut cov, &p, &at, 70.0, 9.0).unwrap(), 0);
        assert_eq!(cov, before);
    }

    #[test]
    fn zigzag_leaves_occluded_stations() {
        let p = TubeProfile::preset("zigzag_tube").unwrap();
        let at = CorridorPoint::new(500.0, 0.0, p.floor_at(500.0).unwrap() + SENSOR_HEIGHT_M);
        let seen = visible_stations(&p, &at, 70.0).unwrap();
        let eye = ProfilePoint::new(at.s, at.z);
        let mut hidden_in_range = 0;
        for (i, st) in p.stations().iter().enumerate() {
            let target = ProfilePoint::new(st.s, st.floor_z + SENSOR_HEIGHT_M);
            let in_range = (target.s - eye.s).hypot(target.z - eye.z) <= 70.0;
            let oracle = in_range && (target.s == eye.s || fine_los(&p, eye, target));
            assert_eq!(seen.contains(&i), oracle, "station {}", st.s);
            hidden_in_range += usize::from(in_range && !oracle);
        }
        assert!(hidden_in_range > 0);
    }

    #[test]
    fn csv_layout() {
        let p = TubeProfile::flat("f", 10.0, 5.0, 4.0, 5.0).unwrap();
        let mut cov = CoverageMap::new(&p);
        scan(&mut cov, &p, &CorridorPoint::new(0.0, 0.0, 0.15), 6.0, 2.5).unwrap();
        assert_eq!(
            cov.to_csv(),
            "station_s,observed,t_first\n0,true,2.5\n5,true,2.5\n10,false,\n"
        );
    }
}
