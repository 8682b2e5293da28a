use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NavError, RobotId};
use crate::hopplan::CorridorPoint;
use crate::terrain::{ProfilePoint, TubeProfile};

/// Slack on the range gates so a target exactly at the limit counts as inside.
pub const RANGE_GATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSpec {
    /// 1σ relative laser range error.
    pub laser_rel_sigma: f64,
    pub laser_max_range_m: f64,
    /// 1σ error of the laser turret azimuth, rad.
    pub laser_bearing_sigma_rad: f64,
    pub blob_detect_range_m: f64,
    /// Radial 1σ of a stereo position fix, m.
    pub stereo_fix_sigma_m: f64,
    pub leg_length_m: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            laser_rel_sigma: 2.5e-5,
            laser_max_range_m: 70.0,
            laser_bearing_sigma_rad: 2.5e-5,
            blob_detect_range_m: 7.0,
            stereo_fix_sigma_m: 0.25,
            leg_length_m: 7.0,
        }
    }
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), NavError> {
        let fields = [
            ("laser_rel_sigma", self.laser_rel_sigma),
            ("laser_max_range_m", self.laser_max_range_m),
            ("laser_bearing_sigma_rad", self.laser_bearing_sigma_rad),
            ("blob_detect_range_m", self.blob_detect_range_m),
            ("stereo_fix_sigma_m", self.stereo_fix_sigma_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NavError::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(5.0..=9.0).contains(&self.leg_length_m) {
            return Err(NavError::InvalidInput(format!(
                "leg_length_m must be in [5, 9], got {}",
                self.leg_length_m
            )));
        }
        Ok(())
    }

    /// Per-axis σ of a stereo fix (the radial σ split over two axes).
    pub fn stereo_axis_sigma(&self) -> f64 {
        self.stereo_fix_sigma_m / std::f64::consts::SQRT_2
    }
}

/// Which noise sources are active. All off gives an exact simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseToggles {
    pub laser: bool,
    pub stereo: bool,
    pub landing: bool,
}

impl Default for NoiseToggles {
    fn default() -> Self {
        Self::all()
    }
}

impl NoiseToggles {
    pub fn all() -> Self {
        Self {
            laser: true,
            stereo: true,
            landing: true,
        }
    }

    pub fn none() -> Self {
        Self {
            laser: false,
            stereo: false,
            landing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementKind {
    LaserRange,
    StereoFix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub observer: RobotId,
    pub target: RobotId,
    /// Slant range, m.
    pub range_m: f64,
    /// 1σ of the range (laser) or of the position fix (stereo), m.
    pub sigma_m: f64,
    /// Floor-plane azimuth from observer to target, rad, when measured.
    pub bearing_rad: Option<f64>,
    pub bearing_sigma_rad: Option<f64>,
    /// Height of the target above the observer, m (known from the map).
    pub dz_m: f64,
}

impl Measurement {
    /// Range projected onto the floor plane and its σ.
    pub fn horizontal(&self) -> (f64, f64) {
        let h = (self.range_m * self.range_m - self.dz_m * self.dz_m)
            .max(0.0)
            .sqrt()
            .max(1e-6);
        (h, self.sigma_m * self.range_m / h)
    }

    /// Observed floor-plane vector from observer to target.
    pub fn offset(&self) -> Option<nalgebra::Vector2<f64>> {
        let b = self.bearing_rad?;
        let (h, _) = self.horizontal();
        Some(nalgebra::Vector2::new(b.cos(), b.sin()) * h)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("target at {distance_m:.3} m is beyond the {max_m} m range")]
    OutOfRange { distance_m: f64, max_m: f64 },
    #[error("line of sight is blocked")]
    Occluded,
    #[error("target not visible to stereo ({distance_m:.3} m)")]
    NotVisible { distance_m: f64 },
}

fn slant(a: &CorridorPoint, b: &CorridorPoint) -> f64 {
    a.horizontal_distance(b).hypot(b.z - a.z)
}

fn azimuth(a: &CorridorPoint, b: &CorridorPoint) -> f64 {
    (b.lateral - a.lateral).atan2(b.s - a.s)
}

fn visible(profile: &TubeProfile, a: &CorridorPoint, b: &CorridorPoint) -> Result<bool, NavError> {
    Ok(profile.line_of_sight(ProfilePoint::new(a.s, a.z), ProfilePoint::new(b.s, b.z))?)
}

fn gauss<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

/// Laser range from `observer` to `target`. With `with_bearing` the turret
/// azimuth is reported as well.
#[allow(clippy::too_many_arguments)]
pub fn measure_laser<R: Rng + ?Sized>(
    observer: (RobotId, &CorridorPoint),
    target: (RobotId, &CorridorPoint),
    spec: &SensorSpec,
    noisy: bool,
    with_bearing: bool,
    profile: &TubeProfile,
    rng: &mut R,
) -> Result<Result<Measurement, MeasureError>, NavError> {
    let (a, b) = (observer.1, target.1);
    let d = slant(a, b);
    if d > spec.laser_max_range_m + RANGE_GATE_TOL {
        return Ok(Err(MeasureError::OutOfRange {
            distance_m: d,
            max_m: spec.laser_max_range_m,
        }));
    }
    if !visible(profile, a, b)? {
        return Ok(Err(MeasureError::Occluded));
    }
    let sigma = spec.laser_rel_sigma * d;
    let range = if noisy {
        (d + gauss(rng, sigma)).max(0.0)
    } else {
        d
    };
    let (bearing, bearing_sigma) = if with_bearing {
        let psi = azimuth(a, b);
        let noise = if noisy {
            gauss(rng, spec.laser_bearing_sigma_rad)
        } else {
            0.0
        };
        (Some(psi + noise), Some(spec.laser_bearing_sigma_rad))
    } else {
        (None, None)
    };
    Ok(Ok(Measurement {
        kind: MeasurementKind::LaserRange,
        observer: observer.0,
        target: target.0,
        range_m: range,
        sigma_m: sigma.max(f64::MIN_POSITIVE),
        bearing_rad: bearing,
        bearing_sigma_rad: bearing_sigma,
        dz_m: b.z - a.z,
    }))
}

/// Stereo blob detection of `target` seen from `observer`: range and bearing
/// whose combined position error has radial σ `stereo_fix_sigma_m`.
pub fn measure_stereo<R: Rng + ?Sized>(
    observer: (RobotId, &CorridorPoint),
    target: (RobotId, &CorridorPoint),
    spec: &SensorSpec,
    noisy: bool,
    profile: &TubeProfile,
    rng: &mut R,
) -> Result<Result<Measurement, MeasureError>, NavError> {
    let (a, b) = (observer.1, target.1);
    let d = slant(a, b);
    if d > spec.blob_detect_range_m + RANGE_GATE_TOL || !visible(profile, a, b)? {
        return Ok(Err(MeasureError::NotVisible { distance_m: d }));
    }
    let axis = spec.stereo_axis_sigma();
    let horizontal = a.horizontal_distance(b).max(1e-6);
    let bearing_sigma = axis / horizontal;
    let (range, bearing) = if noisy {
        (
            (d + gauss(rng, axis)).max(0.0),
            azimuth(a, b) + gauss(rng, bearing_sigma),
        )
    } else {
        (d, azimuth(a, b))
    };
    Ok(Ok(Measurement {
        kind: MeasurementKind::StereoFix,
        observer: observer.0,
        target: target.0,
        range_m: range,
        sigma_m: spec.stereo_fix_sigma_m,
        bearing_rad: Some(bearing),
        bearing_sigma_rad: Some(bearing_sigma),
        dz_m: b.z - a.z,
    }))
}
