//! Acceptance checks A1 to A11. Each prints one PASS/FAIL line; run with
//! `cargo test -p pitbot-cli --test acceptance -- --nocapture` to see them.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pitbot_core::hopplan::{ballistic_solve, hop_sequence_range, plan_min_fuel_hop};
use pitbot_core::navloc::{
    run_localization_mc, trilaterate, FixChannel, McParams, RangeObservation, Side, SENSOR_HEIGHT_M,
};
use pitbot_core::propulsion::{dv_capacity, propellant_for_dv, tank_fit_check};
use pitbot_core::simcore::{budget_report, run, MissionOutput, Scenario};
use pitbot_core::{
    BodyConstants, CorridorPoint, EngineSpec, MassBudget, PlannerConfig, PoseEstimate,
    ProfilePoint, TubeProfile, Vector2,
};

const MOON: BodyConstants = BodyConstants::MOON;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, pass, detail }
}

fn a1_range() -> Verdict {
    let engine = EngineSpec::default();
    let budget = MassBudget::default();
    let dv = dv_capacity(&engine, &budget).unwrap();
    let km = hop_sequence_range(dv, 100.0, MOON).unwrap() / 1000.0;
    let oracle_hops = (330.0 * 9.80665 * 1.5f64.ln() / (2.0 * (100.0f64 * 1.62).sqrt())).floor();
    let oracle_km = oracle_hops * 100.0 / 1000.0;
    let pass = (4.5..=5.7).contains(&km) && (km - oracle_km).abs() < 1e-12;
    verdict(
        "A1",
        pass,
        format!("range {km:.3} km with 100 m hops (closed form {oracle_km:.3} km; claim 5 km)"),
    )
}

/// Minimum-dv flat hop by exhaustive 0.001° search, with an optional apex cap.
fn brute_force(range: f64, ceiling: Option<f64>) -> (f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 1..90_000 {
        let theta = k as f64 * 0.001;
        let sol = ballistic_solve(range, 0.0, 1.62, theta).unwrap();
        let vz = sol.speed * theta.to_radians().sin();
        let apex = vz * vz / (2.0 * 1.62);
        if ceiling.is_some_and(|c| apex > c) {
            continue;
        }
        if 2.0 * sol.speed < best.1 {
            best = (theta, 2.0 * sol.speed);
        }
    }
    best
}

fn a2_planner() -> Verdict {
    let o = CorridorPoint::on_axis(0.0, 0.0);
    let t = CorridorPoint::on_axis(100.0, 0.0);
    let free = plan_min_fuel_hop(o, t, MOON, None, &PlannerConfig::with_margin(0.0)).unwrap();
    let tube = TubeProfile::flat("ceiling", 200.0, 10.0, 10.0, 200.0).unwrap();
    let capped =
        plan_min_fuel_hop(o, t, MOON, Some(&tube), &PlannerConfig::with_margin(0.0)).unwrap();
    let (bf_free, bf_free_dv) = brute_force(100.0, None);
    let (bf_cap, bf_cap_dv) = brute_force(100.0, Some(10.0));
    let pass = (free.launch_angle - 45.0).abs() <= 0.01
        && (free.dv_total - 25.456).abs() <= 0.001
        && (capped.launch_angle - 21.801).abs() <= 0.01
        && (capped.dv_total - 30.653).abs() <= 0.005
        && (free.launch_angle - bf_free).abs() <= 0.01
        && (capped.launch_angle - bf_cap).abs() <= 0.01
        && (free.dv_total - bf_free_dv).abs() <= 0.001
        && (capped.dv_total - bf_cap_dv).abs() <= 0.005;
    verdict(
        "A2",
        pass,
        format!(
            "flat {:.4} deg / {:.4} m/s (grid {bf_free:.3} deg); ceiling 10 m {:.4} deg / {:.4} m/s (grid {bf_cap:.3} deg)",
            free.launch_angle, free.dv_total, capped.launch_angle, capped.dv_total
        ),
    )
}

fn a3_rocket_equation() -> Verdict {
    let engine = EngineSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let total = rng.random_range(0.5..50.0);
        let frac: f64 = rng.random_range(1e-6..0.9);
        let budget = MassBudget::new(total * (1.0 - frac), total * frac).unwrap();
        let dv = dv_capacity(&engine, &budget).unwrap();
        let back = propellant_for_dv(&engine, budget.total_kg(), dv, false).unwrap();
        worst = worst.max((back - budget.propellant_kg).abs() / budget.propellant_kg);
    }
    verdict(
        "A3",
        worst <= 1e-9,
        format!("worst relative round-trip error {worst:.2e} over 1000 budgets"),
    )
}

fn a4_trilateration() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_exact = 0.0f64;
    let mut geoms = 0;
    while geoms < 1000 {
        let mut point =
            || Vector2::<f64>::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let (a1, a2, q) = (point(), point(), point());
        let d = (a2 - a1).norm();
        let h = ((a2 - a1).x * (q - a1).y - (a2 - a1).y * (q - a1).x).abs() / d.max(1e-12);
        if d < 1.0 || h / d < 0.05 {
            continue;
        }
        geoms += 1;
        let fix = trilaterate(
            &PoseEstimate::exact(a1.x, a1.y),
            &PoseEstimate::exact(a2.x, a2.y),
            RangeObservation::new((q - a1).norm(), 0.0),
            RangeObservation::new((q - a2).norm(), 0.0),
            Side::of_point(a1, a2, q),
        )
        .unwrap();
        worst_exact = worst_exact.max((fix.estimate.mean - q).norm());
    }

    let mut worst_ratio = 0.0f64;
    for _ in 0..5 {
        let (a1, a2, q) = loop {
            let a1 = Vector2::<f64>::new(0.0, 0.0);
            let a2 = Vector2::<f64>::new(rng.random_range(5.0..15.0), 0.0);
            let q = Vector2::<f64>::new(rng.random_range(-5.0..20.0), rng.random_range(4.0..15.0));
            if (q - a1).norm() > 1.0 && (q - a2).norm() > 1.0 {
                break (a1, a2, q);
            }
        };
        let sigma = 0.01 * (a2 - a1).norm();
        let (r1, r2) = ((q - a1).norm(), (q - a2).norm());
        let anchors = (
            PoseEstimate::exact(a1.x, a1.y),
            PoseEstimate::exact(a2.x, a2.y),
        );
        let side = Side::of_point(a1, a2, q);
        let predicted = trilaterate(
            &anchors.0,
            &anchors.1,
            RangeObservation::new(r1, sigma),
            RangeObservation::new(r2, sigma),
            side,
        )
        .unwrap()
        .estimate
        .trace();
        let n = Normal::new(0.0, sigma).unwrap();
        let samples: Vec<Vector2<f64>> = (0..10_000)
            .map(|_| {
                trilaterate(
                    &anchors.0,
                    &anchors.1,
                    RangeObservation::new(r1 + n.sample(&mut rng), sigma),
                    RangeObservation::new(r2 + n.sample(&mut rng), sigma),
                    side,
                )
                .unwrap()
                .estimate
                .mean
            })
            .collect();
        let mean = samples.iter().sum::<Vector2<f64>>() / samples.len() as f64;
        let spread = samples
            .iter()
            .map(|s| (s - mean).norm_squared())
            .sum::<f64>()
            / (samples.len() - 1) as f64;
        worst_ratio = worst_ratio.max((predicted / spread - 1.0).abs());
    }
    verdict(
        "A4",
        worst_exact <= 1e-9 && worst_ratio <= 0.10,
        format!(
            "zero-noise error {worst_exact:.2e} m over 1000 geometries; covariance trace within {:.1} % of 1e4-trial spread",
            100.0 * worst_ratio
        ),
    )
}

fn mc(channel: FixChannel) -> pitbot_core::ErrorStats {
    let mut p = McParams::default();
    p.localization.channel = channel;
    run_localization_mc(&p, 1000, 42).unwrap()
}

fn a5_a6_localization() -> (Verdict, Verdict) {
    let stereo = mc(FixChannel::Stereo);
    let laser = mc(FixChannel::Laser);
    let text = stereo.to_text();
    let noted = text.contains("calibrat") && text.contains("not derived from the laser");
    let a5 = verdict(
        "A5",
        (0.25..=0.40).contains(&stereo.relative_error_pct)
            && laser.relative_error_pct <= 0.01
            && noted,
        format!(
            "stereo {:.4} % at {:.0} m (oracle 0.299 %), laser-only {:.5} %, calibration note {}",
            stereo.relative_error_pct,
            stereo.final_distance_m,
            laser.relative_error_pct,
            if noted { "present" } else { "missing" }
        ),
    );
    let k = stereo.growth_exponent;
    let a6 = verdict(
        "A6",
        k.is_some_and(|k| (0.4..=0.6).contains(&k)),
        match k {
            Some(k) => format!("log-log growth exponent {k:.3} of radial error vs leg count (stereo, i.i.d. per leg)"),
            None => "growth exponent not computable".to_string(),
        },
    );
    (a5, a6)
}

fn a7_fly_time() -> Verdict {
    let r = budget_report(&Scenario::preset("flat_tube", 0.0, 0).resolve().unwrap()).unwrap();
    let hover = r.row("hover_endurance").unwrap().computed;
    let fly = r.row("fly_time").unwrap();
    let need = r.row("propellant_for_claimed_fly_time").unwrap();
    let pass = (hover - 810.0).abs() <= 1.0
        && (need.computed - 2.15).abs() <= 0.02
        && fly.flagged
        && need.flagged;
    verdict(
        "A7",
        pass,
        format!(
            "hover {hover:.1} s ({:.3} hr vs 0.7 hr claimed, flagged {}); 0.7 hr needs {:.3} kg",
            fly.computed, fly.flagged, need.computed
        ),
    )
}

fn a8_tank() -> Verdict {
    let t = tank_fit_check(&EngineSpec::default(), 1.0, 0.30).unwrap();
    let pass = (t.volume_m3 - 9.14e-4).abs() <= 1e-6 && t.available_m3 >= 7.068e-3 && t.fits;
    verdict(
        "A8",
        pass,
        format!(
            "1.0 kg occupies {:.4e} m3 of {:.4e} m3, fits = {}",
            t.volume_m3, t.available_m3, t.fits
        ),
    )
}

fn run_cli(scenario: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pitbot"))
        .args(["run", "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn a9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let mut sc = Scenario::preset("zigzag_tube", 500.0, 1234);
    sc.losses.push(pitbot_core::simcore::Loss {
        robot: pitbot_core::RobotId::C,
        leg: 30,
    });
    std::fs::write(&scenario, sc.to_json_pretty()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ran = run_cli(&scenario, &a) && run_cli(&scenario, &b);
    let files = [
        "report.json",
        "events.jsonl",
        "trajectory.csv",
        "coverage.csv",
    ];
    let same = ran
        && files.iter().all(|f| {
            let x = std::fs::read(a.join(f)).unwrap_or_default();
            let y = std::fs::read(b.join(f)).unwrap_or_else(|_| vec![1]);
            !x.is_empty() && x == y
        });
    verdict(
        "A9",
        same,
        format!("two `run` invocations, byte-identical {}", files.join(", ")),
    )
}

fn fine_los(profile: &TubeProfile, a: ProfilePoint, b: ProfilePoint) -> bool {
    let n = 4000;
    (1..n).all(|k| {
        let u = k as f64 / n as f64;
        let s = a.s + u * (b.s - a.s);
        let z = a.z + u * (b.z - a.z);
        z > profile.floor_at(s).unwrap() && z < profile.ceiling_at(s).unwrap()
    })
}

/// Coverage recomputed from every pose the robots stood at, using the
/// sampled line-of-sight oracle.
fn oracle_coverage(profile: &TubeProfile, out: &MissionOutput, range: f64) -> Vec<bool> {
    let poses: BTreeSet<(u64, u64)> = out
        .trajectory
        .iter()
        .map(|r| (r.true_s.to_bits(), r.true_z.to_bits()))
        .collect();
    profile
        .stations()
        .iter()
        .map(|st| {
            let target = ProfilePoint::new(
                st.s,
                st.floor_z + SENSOR_HEIGHT_M.min(0.5 * (st.ceiling_z - st.floor_z)),
            );
            poses.iter().any(|&(s, z)| {
                let eye = ProfilePoint::new(f64::from_bits(s), f64::from_bits(z));
                (target.s - eye.s).hypot(target.z - eye.z) <= range
                    && (target.s == eye.s || fine_los(profile, eye, target))
            })
        })
        .collect()
}

fn a10_physicality() -> Verdict {
    let mare = run(&Scenario::preset("mare_ingenii_pit", 500.0, 10)).unwrap();
    let r = &mare.report;
    let mare_ok = r.arrived
        && r.wheeled_infeasible
        && r.arc_samples_checked > 0
        && r.arc_samples_outside == 0
        && r.min_arc_floor_clearance_m.is_some_and(|c| c > 0.0)
        && r.min_arc_ceiling_clearance_m.is_some_and(|c| c > 0.0);

    let flat = run(&Scenario::preset("flat_tube", 300.0, 10)).unwrap();
    let zig_sc = Scenario::preset("zigzag_tube", 300.0, 10);
    let zig = run(&zig_sc).unwrap();
    let profile = zig_sc.profile.resolve().unwrap();
    let oracle = oracle_coverage(&profile, &zig, 70.0);
    let matches = (0..zig.coverage.len()).all(|i| zig.coverage.is_observed(i) == oracle[i]);
    let occluded = zig.report.coverage_fraction < flat.report.coverage_fraction;
    verdict(
        "A10",
        mare_ok && matches && occluded,
        format!(
            "pit: wheeled_infeasible {}, max slope {:.1} deg, {} of {} arc samples outside; coverage at 300 m zigzag {:.3} < flat {:.3}, oracle agreement {}",
            r.wheeled_infeasible,
            r.max_traversed_slope_deg,
            r.arc_samples_outside,
            r.arc_samples_checked,
            zig.report.coverage_fraction,
            flat.report.coverage_fraction,
            matches
        ),
    )
}

fn a11_conservation() -> Verdict {
    let mut scenarios = vec![
        Scenario::preset("flat_tube", 990.0, 1),
        Scenario::preset("mare_ingenii_pit", 500.0, 2),
        Scenario::preset("zigzag_tube", 800.0, 3),
    ];
    let mut rolling = Scenario::preset("flat_tube", 300.0, 4);
    rolling.mass.propellant_kg = 0.1;
    scenarios.push(rolling);
    let mut lossy = Scenario::preset("zigzag_tube", 400.0, 5);
    lossy.losses.push(pitbot_core::simcore::Loss {
        robot: pitbot_core::RobotId::A,
        leg: 12,
    });
    scenarios.push(lossy);

    let mut worst = 0.0f64;
    let mut robots = 0;
    for sc in &scenarios {
        let out = run(sc).unwrap();
        for r in &out.report.robots {
            let (mut prop, mut wh) = (0.0, 0.0);
            for e in out.events.for_robot(r.id) {
                prop += e.kind.propellant_kg();
                wh += e.kind.battery_wh();
            }
            worst = worst
                .max((prop + r.propellant_remaining_kg - r.propellant_initial_kg).abs())
                .max((wh + r.battery_remaining_wh - r.battery_initial_wh).abs());
            robots += 1;
        }
    }
    verdict(
        "A11",
        worst <= 1e-9,
        format!(
            "worst propellant/battery imbalance {worst:.2e} over {robots} robots in {} missions",
            scenarios.len()
        ),
    )
}

#[test]
fn acceptance() {
    let (a5, a6) = a5_a6_localization();
    let verdicts = vec![
        a1_range(),
        a2_planner(),
        a3_rocket_equation(),
        a4_trilateration(),
        a5,
        a6,
        a7_fly_time(),
        a8_tank(),
        a9_determinism(),
        a10_physicality(),
        a11_conservation(),
    ];
    for v in &verdicts {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.detail
        );
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
