use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::formation::{
    advance_formation, initial_formation, FixChannel, FixKind, FormationGeometry,
    LocalizationConfig, RobotId,
};
use super::NavError;
use crate::terrain::TubeProfile;

/// Mean errors at or below this are treated as numerical zero when fitting
/// the growth exponent.
pub const ZERO_ERROR_FLOOR_M: f64 = 1e-9;

pub const CALIBRATION_NOTE: &str = "The 0.3-0.5 % at 1 km error band is reproduced by calibrating stereo_fix_sigma_m \
(0.25 m per fix); it is not derived from the laser range specification, whose noise alone gives an error orders of \
magnitude smaller.";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McParams {
    pub legs: usize,
    pub robots: usize,
    pub localization: LocalizationConfig,
    pub checkpoint_spacing_m: f64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            legs: 143,
            robots: 3,
            localization: LocalizationConfig {
                channel: FixChannel::Stereo,
                ..LocalizationConfig::default()
            },
            checkpoint_spacing_m: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// True radial distance from the base, m.
    pub distance_m: f64,
    pub mean_error_m: f64,
    pub median_error_m: f64,
    pub p95_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub trials: usize,
    pub legs: usize,
    pub robots: usize,
    pub leg_length_m: f64,
    pub seed: u64,
    pub channel: FixChannel,
    pub final_distance_m: f64,
    pub final_mean_error_m: f64,
    pub final_median_error_m: f64,
    pub final_p95_error_m: f64,
    pub relative_error_pct: f64,
    /// Log-log slope of mean error against leg count; absent when every
    /// error is below [`ZERO_ERROR_FLOOR_M`].
    pub growth_exponent: Option<f64>,
    pub dead_reckoned_legs: u64,
    pub geometry_warnings: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub per_leg_mean_error_m: Vec<f64>,
    pub calibration_note: String,
}

impl ErrorStats {
    /// Flat `key = value` report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "legs = {}", self.legs);
        let _ = writeln!(out, "robots = {}", self.robots);
        let _ = writeln!(out, "leg_length_m = {}", self.leg_length_m);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "channel = {:?}", self.channel);
        let _ = writeln!(out, "final_distance_m = {:.3}", self.final_distance_m);
        let _ = writeln!(out, "final_mean_error_m = {:.6}", self.final_mean_error_m);
        let _ = writeln!(
            out,
            "final_median_error_m = {:.6}",
            self.final_median_error_m
        );
        let _ = writeln!(out, "final_p95_error_m = {:.6}", self.final_p95_error_m);
        let _ = writeln!(out, "relative_error_pct = {:.6}", self.relative_error_pct);
        let _ = writeln!(out, "growth_exponent = {}", opt(self.growth_exponent));
        let _ = writeln!(out, "dead_reckoned_legs = {}", self.dead_reckoned_legs);
        let _ = writeln!(out, "geometry_warnings = {}", self.geometry_warnings);
        for c in &self.checkpoints {
            let d = c.distance_m.round() as i64;
            let _ = writeln!(out, "checkpoint_{d}m_mean_m = {:.6}", c.mean_error_m);
            let _ = writeln!(out, "checkpoint_{d}m_median_m = {:.6}", c.median_error_m);
            let _ = writeln!(out, "checkpoint_{d}m_p95_m = {:.6}", c.p95_error_m);
        }
        let _ = writeln!(out, "note = {}", self.calibration_note);
        out
    }
}

/// One row per leg per trial, for the mover of that leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: usize,
    pub leg: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub radial_error_m: f64,
}

pub const TRACE_CSV_HEADER: &str = "trial,leg,true_x,true_y,est_x,est_y,radial_error_m";

pub fn traces_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + 64);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial, r.leg, r.true_x, r.true_y, r.est_x, r.est_y, r.radial_error_m
        );
    }
    out
}

struct Trial {
    rows: Vec<TraceRow>,
    /// True radial distance of the mover from the base after each leg.
    distance: Vec<f64>,
    dead_reckoned: u64,
    warnings: u64,
}

fn validate(params: &McParams, trials: usize) -> Result<(), NavError> {
    params.localization.validate()?;
    if trials == 0 {
        return Err(NavError::InvalidInput(
            "at least one trial is required".into(),
        ));
    }
    if params.legs == 0 {
        return Err(NavError::InvalidInput(
            "at least one leg is required".into(),
        ));
    }
    if !(1..=3).contains(&params.robots) {
        return Err(NavError::InvalidInput(format!(
            "robots must be 1 to 3, got {}",
            params.robots
        )));
    }
    if !(params.checkpoint_spacing_m > 0.0) {
        return Err(NavError::InvalidInput(
            "checkpoint spacing must be positive".into(),
        ));
    }
    Ok(())
}

fn run_trial(
    params: &McParams,
    profile: &TubeProfile,
    geometry: FormationGeometry,
    seed: u64,
    trial: usize,
) -> Result<Trial, NavError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let (mut state, mut chain, mut truth) =
        initial_formation(&RobotId::ALL[..params.robots], geometry, profile)?;
    let base = chain.anchor.mean;
    let mut out = Trial {
        rows: Vec::with_capacity(params.legs),
        distance: Vec::with_capacity(params.legs),
        dead_reckoned: 0,
        warnings: 0,
    };
    for leg in 0..params.legs {
        let target = state.next_target(profile)?;
        let o = advance_formation(
            &mut state,
            &mut chain,
            &mut truth,
            target,
            profile,
            &params.localization,
            &mut rng,
        )?;
        let (tx, ty) = (o.landed.s, o.landed.lateral);
        out.rows.push(TraceRow {
            trial,
            leg,
            true_x: tx,
            true_y: ty,
            est_x: o.estimate.mean.x,
            est_y: o.estimate.mean.y,
            radial_error_m: o.estimate.distance_to(tx, ty),
        });
        out.distance.push((tx - base.x).hypot(ty - base.y));
        out.dead_reckoned += u64::from(o.fix == FixKind::DeadReckoned);
        out.warnings += o.warnings.len() as u64;
    }
    Ok(out)
}

fn run_trials(params: &McParams, trials: usize, seed: u64) -> Result<Vec<Trial>, NavError> {
    validate(params, trials)?;
    let leg = params.localization.sensors.leg_length_m;
    let length = params.legs as f64 * leg + 3.0 * leg + 10.0;
    let profile = TubeProfile::flat("mc_flat", length, 15.0, 10.0, 50.0)?;
    let geometry = FormationGeometry::new(leg, profile.width_m(), 0.0, length - 1.0)?;
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(params, &profile, geometry, seed, t))
        .collect()
}

fn summarize(mut v: Vec<f64>) -> (f64, f64, f64) {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1;
    (mean, median, v[rank])
}

/// Least-squares slope of `ln y` against `ln x` over positive samples.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn stats(params: &McParams, trials: &[Trial], seed: u64) -> ErrorStats {
    let legs = params.legs;
    let per_leg: Vec<f64> = (0..legs)
        .map(|l| trials.iter().map(|t| t.rows[l].radial_error_m).sum::<f64>() / trials.len() as f64)
        .collect();
    let growth = loglog_slope(
        per_leg
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > ZERO_ERROR_FLOOR_M)
            .map(|(i, e)| ((i + 1) as f64, *e)),
    );

    let last = legs - 1;
    let (fmean, fmedian, fp95) =
        summarize(trials.iter().map(|t| t.rows[last].radial_error_m).collect());
    let final_distance = trials.iter().map(|t| t.distance[last]).sum::<f64>() / trials.len() as f64;

    let mut checkpoints = Vec::new();
    let mut k = 1;
    loop {
        let d = k as f64 * params.checkpoint_spacing_m;
        let errs: Option<Vec<f64>> = trials
            .iter()
            .map(|t| {
                t.distance
                    .iter()
                    .position(|x| *x >= d)
                    .map(|i| t.rows[i].radial_error_m)
            })
            .collect();
        let Some(errs) = errs else { break };
        let (mean, median, p95) = summarize(errs);
        checkpoints.push(Checkpoint {
            distance_m: d,
            mean_error_m: mean,
            median_error_m: median,
            p95_error_m: p95,
        });
        k += 1;
    }

    ErrorStats {
        trials: trials.len(),
        legs,
        robots: params.robots,
        leg_length_m: params.localization.sensors.leg_length_m,
        seed,
        channel: params.localization.channel,
        final_distance_m: final_distance,
        final_mean_error_m: fmean,
        final_median_error_m: fmedian,
        final_p95_error_m: fp95,
        relative_error_pct: if final_distance > 0.0 {
            100.0 * fmean / final_distance
        } else {
            0.0
        },
        growth_exponent: growth,
        dead_reckoned_legs: trials.iter().map(|t| t.dead_reckoned).sum(),
        geometry_warnings: trials.iter().map(|t| t.warnings).sum(),
        checkpoints,
        per_leg_mean_error_m: per_leg,
        calibration_note: CALIBRATION_NOTE.to_string(),
    }
}

/// Monte Carlo of the localization chain on a flat corridor. Each trial owns
/// stream `trial` of a ChaCha8 generator seeded with `seed`, so results do
/// not depend on thread scheduling.
pub fn run_localization_mc(
    params: &McParams,
    trials: usize,
    seed: u64,
) -> Result<ErrorStats, NavError> {
    let runs = run_trials(params, trials, seed)?;
    Ok(stats(params, &runs, seed))
}

pub fn run_localization_mc_with_traces(
    params: &McParams,
    trials: usize,
    seed: u64,
) -> Result<(ErrorStats, Vec<TraceRow>), NavError> {
    let runs = run_trials(params, trials, seed)?;
    let stats = stats(params, &runs, seed);
    Ok((stats, runs.into_iter().flat_map(|t| t.rows).collect()))
}
