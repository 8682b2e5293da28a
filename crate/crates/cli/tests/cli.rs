use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pitbot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pitbot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn budget_defaults() {
    let o = pitbot(&["budget"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in [
        "dv_capacity",
        "range_100m_hops",
        "fly_time",
        "tank_volume",
        "battery_endurance",
    ] {
        assert!(text.contains(key), "{key}");
    }
    assert!(text.contains("DISCREPANCY"));

    let json: serde_json::Value =
        serde_json::from_slice(&pitbot(&["budget", "--json"]).stdout).unwrap();
    assert!(json["rows"].as_array().unwrap().len() >= 8);
}

#[test]
fn plan_hop_ceiling_case() {
    let o = pitbot(&[
        "plan-hop",
        "--range",
        "100",
        "--gravity",
        "moon",
        "--ceiling",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((value(&text, "launch_angle_deg") - 21.801).abs() < 0.01);
    assert!((value(&text, "dv_total_mps") - 30.653).abs() < 0.005);
}

#[test]
fn plan_hop_flat_with_extras() {
    let o = pitbot(&[
        "plan-hop",
        "--range",
        "100",
        "--samples",
        "1.0",
        "--compare",
        "7,100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((value(&text, "launch_angle_deg") - 45.0).abs() < 0.01);
    assert!(text.contains("t_s,s_m,z_m,vs_mps,vz_mps"));
    assert!(text
        .contains("hop_length_m,dv_per_hop_mps,propellant_per_hop_kg,flight_time_s,total_range_m"));
}

#[test]
fn plan_hop_infeasible_exits_3() {
    let o = pitbot(&[
        "plan-hop",
        "--range",
        "50",
        "--ceiling",
        "0.05",
        "--margin",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no feasible hop"));
}

#[test]
fn bad_gravity_is_a_config_error() {
    let o = pitbot(&["plan-hop", "--range", "10", "--gravity", "jupiterish"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_scenario_names_the_path() {
    let o = pitbot(&["run", "--scenario", "missing.json", "--out", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn unknown_scenario_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"profile": "flat_tube", "target_s": 10, "seed": 1, "warp": 9}"#,
    )
    .unwrap();
    let o = pitbot(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("warp"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_flag_and_missing_seed_are_usage_errors() {
    assert_eq!(pitbot(&["budget", "--frobnicate"]).status.code(), Some(2));
    let o = pitbot(&["localize-mc", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn help_lists_flags_and_defaults() {
    let text = stdout(&pitbot(&["localize-mc", "--help"]));
    for flag in [
        "--seed",
        "--legs",
        "--leg-length",
        "--trials",
        "--channel",
        "--robots",
        "--traces",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
    assert!(text.contains("[default: 143]"));
    assert!(text.contains("[default: stereo]"));
    for sub in ["budget", "plan-hop", "run", "presets"] {
        assert_eq!(pitbot(&[sub, "--help"]).status.code(), Some(0));
    }
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/out");
    let sc = scenarios_dir().join("robot_loss.json");
    let o = pitbot(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("arrived = true"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["arrived"], true);
    let events = std::fs::read_to_string(out.join("events.jsonl")).unwrap();
    assert!(events
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(events.contains(r#""kind":"Lost""#));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t_s,robot,true_s,true_z,est_x,est_y,propellant_kg,battery_wh\n"));
    let cov = std::fs::read_to_string(out.join("coverage.csv")).unwrap();
    assert!(cov.starts_with("station_s,observed,t_first\n"));
    let leftovers: Vec<_> = std::fs::read_dir(&out).unwrap().collect();
    assert_eq!(leftovers.len(), 4);
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenarios_dir().join("zigzag.json");
    let sc = sc.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pitbot(&["run", "--scenario", sc, "--out", a.to_str().unwrap()]);
    pitbot(&[
        "run",
        "--scenario",
        sc,
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    let ea = std::fs::read(a.join("events.jsonl")).unwrap();
    let eb = std::fs::read(b.join("events.jsonl")).unwrap();
    assert_ne!(ea, eb);
}

#[test]
fn stranded_robots_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenarios_dir().join("stranded.json");
    let o = pitbot(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("arrived = false"));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn every_bundled_scenario_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = dir.path().join(path.file_stem().unwrap());
        let o = pitbot(&[
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            matches!(o.status.code(), Some(0) | Some(3)),
            "{}: {}",
            path.display(),
            stderr(&o)
        );
    }
}

#[test]
fn localize_mc_is_repeatable() {
    let args = [
        "localize-mc",
        "--legs",
        "143",
        "--leg-length",
        "7",
        "--trials",
        "200",
        "--seed",
        "42",
    ];
    let a = pitbot(&args);
    let b = pitbot(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let pct = value(&text, "relative_error_pct");
    assert!((0.2..0.4).contains(&pct), "{pct}");
    assert!(text.contains("growth_exponent = "));
    assert!(text.contains("calibrat"));
}

#[test]
fn localize_mc_json_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces.csv");
    let o = pitbot(&[
        "localize-mc",
        "--seed",
        "1",
        "--trials",
        "3",
        "--legs",
        "10",
        "--channel",
        "laser",
        "--json",
        "--traces",
        traces.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["trials"], 3);
    let csv = std::fs::read_to_string(traces).unwrap();
    assert!(csv.starts_with("trial,leg,true_x,true_y,est_x,est_y,radial_error_m\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 10);
}

#[test]
fn invalid_mc_parameters_exit_2() {
    assert_eq!(
        pitbot(&["localize-mc", "--seed", "1", "--leg-length", "12"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pitbot(&["localize-mc", "--seed", "1", "--robots", "4"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn presets_lists_every_profile() {
    let text = stdout(&pitbot(&["presets"]));
    for name in ["flat_tube", "mare_ingenii_pit", "zigzag_tube"] {
        assert!(text.contains(name));
    }
    let json: serde_json::Value =
        serde_json::from_slice(&pitbot(&["presets", "--json"]).stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}
