//! `pitbot`: budgets, hop planning, localization Monte Carlo and full
//! missions from the command line.

mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pitbot_core::hopplan::{
    compare_modes, modes_csv, plan_min_fuel_hop, sample_trajectory, HopError,
};
use pitbot_core::navloc::{
    run_localization_mc, run_localization_mc_with_traces, traces_csv, FixChannel, LaserFixMode,
    McParams,
};
use pitbot_core::simcore::{budget_report, run, trajectory_csv, MissionStatus, Scenario};
use pitbot_core::terrain::{preset_catalog, Station};
use pitbot_core::{
    BodyConstants, CorridorPoint, EngineSpec, MassBudget, PlannerConfig, TubeProfile,
};

use output::{write_all_atomic, write_atomic};

#[derive(Debug, Parser)]
#[command(
    name = "pitbot",
    version,
    about = "Hopping lava-tube robot network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Delta-v, range, hover, battery and tank figures beside the published claims.
    Budget(BudgetArgs),
    /// Minimum-fuel ballistic hop, optionally under a flat ceiling.
    PlanHop(PlanHopArgs),
    /// Monte Carlo of the leapfrog localization chain.
    LocalizeMc(McArgs),
    /// Run a full mission from a scenario file.
    Run(RunArgs),
    /// List the bundled tube profiles.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Scenario whose first robot supplies engine, mass and power specs.
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PlanHopArgs {
    /// Horizontal hop distance, m.
    #[arg(long)]
    range: f64,
    /// Landing height relative to the launch point, m.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    dz: f64,
    /// `moon`, `mars` or a surface gravity in m/s².
    #[arg(long, default_value = "moon")]
    gravity: String,
    /// Flat ceiling height above the launch point, m.
    #[arg(long)]
    ceiling: Option<f64>,
    /// Clearance kept below the ceiling, m.
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    /// Vehicle mass at launch, kg.
    #[arg(long, default_value_t = 3.0)]
    mass: f64,
    /// Also print the fuel-versus-range table for these hop lengths (comma separated, m).
    #[arg(long, value_delimiter = ',', value_name = "LENGTHS")]
    compare: Vec<f64>,
    /// Also print the arc sampled at this time step, s.
    #[arg(long, value_name = "DT")]
    samples: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Auto,
    Laser,
    Stereo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LaserFixArg {
    HeadingReferenced,
    RangeOnly,
}

#[derive(Debug, Args)]
struct McArgs {
    /// RNG seed (required).
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 143)]
    legs: usize,
    /// Formation leg length, m (5 to 9).
    #[arg(long, default_value_t = 7.0)]
    leg_length: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Sensor channel used for fixes.
    #[arg(long, value_enum, default_value_t = ChannelArg::Stereo)]
    channel: ChannelArg,
    /// How two laser anchors are combined.
    #[arg(long, value_enum, default_value_t = LaserFixArg::HeadingReferenced)]
    laser_fix: LaserFixArg,
    /// Robots in the network (1 to 3).
    #[arg(long, default_value_t = 3)]
    robots: usize,
    /// Per-fix stereo position noise, m.
    #[arg(long)]
    stereo_sigma: Option<f64>,
    #[arg(long)]
    no_laser_noise: bool,
    #[arg(long)]
    no_stereo_noise: bool,
    #[arg(long)]
    no_landing_noise: bool,
    /// Emit JSON instead of key = value lines.
    #[arg(long)]
    json: bool,
    /// Write per-leg traces of every trial to this CSV file.
    #[arg(long, value_name = "FILE")]
    traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PresetsArgs {
    #[arg(long)]
    json: bool,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Io(m) => m,
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn io_err(path: &Path) -> impl Fn(anyhow::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e:#}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Budget(a) => budget(a),
        Command::PlanHop(a) => plan_hop(a),
        Command::LocalizeMc(a) => localize_mc(a),
        Command::Run(a) => run_mission(a),
        Command::Presets(a) => presets(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err((text, failure)) => {
            print!("{text}");
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

/// Stdout text, or stdout text produced before the failure plus the failure.
type Outcome = Result<String, (String, Failure)>;

fn fail(f: Failure) -> (String, Failure) {
    (String::new(), f)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn parse_gravity(s: &str) -> Result<BodyConstants, Failure> {
    match s.parse::<f64>() {
        Ok(g) => BodyConstants::new(g).map_err(config),
        Err(_) => BodyConstants::parse(s).map_err(config),
    }
}

fn budget(a: BudgetArgs) -> Outcome {
    let scenario = match &a.scenario {
        Some(p) => load_scenario(p).map_err(fail)?,
        None => Scenario::preset("flat_tube", 0.0, 0),
    };
    let resolved = scenario.resolve().map_err(|e| fail(config(e)))?;
    let report = budget_report(&resolved).map_err(|e| fail(config(e)))?;
    Ok(if a.json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        report.to_text()
    })
}

fn plan_hop(a: PlanHopArgs) -> Outcome {
    let body = parse_gravity(&a.gravity).map_err(fail)?;
    let origin = CorridorPoint::on_axis(0.0, 0.0);
    let target = CorridorPoint::on_axis(a.range, a.dz);
    let profile = match a.ceiling {
        Some(h) => {
            let floor = a.dz.min(0.0);
            let stations = [0.0, a.range.max(0.0)]
                .map(|s| Station {
                    s,
                    floor_z: floor,
                    ceiling_z: h,
                })
                .to_vec();
            Some(TubeProfile::new("plan-hop", stations, 10.0, 0.0).map_err(|e| fail(config(e)))?)
        }
        None => None,
    };
    let cfg = PlannerConfig::with_margin(a.margin);
    let engine = EngineSpec::default();
    let plan = match plan_min_fuel_hop(origin, target, body, profile.as_ref(), &cfg) {
        Ok(p) => p
            .with_propellant(&engine, a.mass)
            .map_err(|e| fail(config(e)))?,
        Err(e @ HopError::Infeasible { .. }) => {
            return Err(fail(Failure::Infeasible(e.to_string())))
        }
        Err(e) => return Err(fail(config(e))),
    };
    let mut out = String::new();
    let _ = writeln!(out, "range_m = {}", a.range);
    let _ = writeln!(out, "dz_m = {}", a.dz);
    let _ = writeln!(out, "gravity_mps2 = {}", body.g);
    let _ = writeln!(out, "launch_angle_deg = {:.6}", plan.launch_angle);
    let _ = writeln!(out, "launch_speed_mps = {:.6}", plan.launch_speed);
    let _ = writeln!(out, "dv_launch_mps = {:.6}", plan.dv_launch);
    let _ = writeln!(out, "dv_land_mps = {:.6}", plan.dv_land);
    let _ = writeln!(out, "dv_total_mps = {:.6}", plan.dv_total);
    let _ = writeln!(out, "flight_time_s = {:.6}", plan.flight_time);
    let _ = writeln!(out, "apex_z_m = {:.6}", plan.apex_z);
    let _ = writeln!(out, "propellant_kg = {:.9}", plan.propellant_kg);
    if let Some(dt) = a.samples {
        let samples = sample_trajectory(&plan, dt).map_err(|e| (out.clone(), config(e)))?;
        out.push_str("\nt_s,s_m,z_m,vs_mps,vz_mps\n");
        for p in samples {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6},{:.6}",
                p.t, p.s, p.z, p.vs, p.vz
            );
        }
    }
    if !a.compare.is_empty() {
        let rows = compare_modes(body, &a.compare, &engine, &MassBudget::default())
            .map_err(|e| (out.clone(), config(e)))?;
        out.push('\n');
        out.push_str(&modes_csv(&rows));
    }
    Ok(out)
}

fn localize_mc(a: McArgs) -> Outcome {
    let mut params = McParams {
        legs: a.legs,
        robots: a.robots,
        ..McParams::default()
    };
    let loc = &mut params.localization;
    loc.sensors.leg_length_m = a.leg_length;
    if let Some(s) = a.stereo_sigma {
        loc.sensors.stereo_fix_sigma_m = s;
    }
    loc.channel = match a.channel {
        ChannelArg::Auto => FixChannel::Auto,
        ChannelArg::Laser => FixChannel::Laser,
        ChannelArg::Stereo => FixChannel::Stereo,
    };
    loc.laser_fix = match a.laser_fix {
        LaserFixArg::HeadingReferenced => LaserFixMode::HeadingReferenced,
        LaserFixArg::RangeOnly => LaserFixMode::RangeOnly,
    };
    loc.noise.laser = !a.no_laser_noise;
    loc.noise.stereo = !a.no_stereo_noise;
    loc.noise.landing = !a.no_landing_noise;

    let (stats, traces) = match &a.traces {
        Some(_) => {
            let (s, t) = run_localization_mc_with_traces(&params, a.trials, a.seed)
                .map_err(|e| fail(config(e)))?;
            (s, Some(t))
        }
        None => (
            run_localization_mc(&params, a.trials, a.seed).map_err(|e| fail(config(e)))?,
            None,
        ),
    };
    let text = if a.json {
        serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"
    } else {
        stats.to_text()
    };
    if let (Some(path), Some(rows)) = (&a.traces, traces) {
        write_atomic(path, traces_csv(&rows).as_bytes())
            .map_err(|e| (text.clone(), io_err(path)(e)))?;
    }
    Ok(text)
}

fn run_mission(a: RunArgs) -> Outcome {
    let mut scenario = load_scenario(&a.scenario).map_err(fail)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    scenario.resolve().map_err(|e| fail(config(e)))?;
    let out = run(&scenario).map_err(|e| fail(config(e)))?;
    let report = &out.report;
    let files = [
        ("report.json", report.to_json_pretty()),
        ("events.jsonl", out.events.to_jsonl()),
        ("trajectory.csv", trajectory_csv(&out.trajectory)),
        ("coverage.csv", out.coverage.to_csv()),
    ];
    write_all_atomic(&a.out, &files).map_err(|e| fail(io_err(&a.out)(e)))?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "status = {}",
        serde_json::to_value(report.status)
            .expect("status")
            .as_str()
            .unwrap_or("?")
    );
    let _ = writeln!(text, "arrived = {}", report.arrived);
    let _ = writeln!(text, "legs = {}", report.legs);
    let _ = writeln!(text, "hops = {}", report.hops);
    let _ = writeln!(text, "duration_s = {:.3}", report.duration_s);
    let _ = writeln!(
        text,
        "distance_covered_m = {:.3}",
        report.distance_covered_m
    );
    let _ = writeln!(
        text,
        "final_radial_error_m = {:.6}",
        report.final_radial_error_m
    );
    let _ = writeln!(
        text,
        "final_relative_error_pct = {:.6}",
        report.final_relative_error_pct
    );
    let _ = writeln!(text, "coverage_fraction = {:.6}", report.coverage_fraction);
    let _ = writeln!(text, "wheeled_infeasible = {}", report.wheeled_infeasible);
    let _ = writeln!(text, "output = {}", a.out.display());
    match report.status {
        MissionStatus::Arrived => Ok(text),
        MissionStatus::AllRobotsOut => Err((
            text,
            Failure::Infeasible("every robot is depleted, blocked or lost".into()),
        )),
        MissionStatus::Stalled | MissionStatus::Running => Err((
            text,
            Failure::Infeasible("the formation stopped making progress".into()),
        )),
    }
}

fn presets(a: PresetsArgs) -> Outcome {
    let catalog = preset_catalog();
    if a.json {
        let list: Vec<serde_json::Value> = catalog
            .iter()
            .map(|(p, notes)| {
                serde_json::json!({
                    "name": p.name(),
                    "length_m": p.length(),
                    "width_m": p.width_m(),
                    "stations": p.stations().len(),
                    "notes": notes,
                })
            })
            .collect();
        return Ok(serde_json::to_string_pretty(&list).expect("presets serialize") + "\n");
    }
    let mut out = String::new();
    for (p, notes) in &catalog {
        let min_clear = p
            .stations()
            .iter()
            .map(|s| s.ceiling_z - s.floor_z)
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            out,
            "{}: length {} m, width {} m, {} stations, min clearance {:.2} m",
            p.name(),
            p.length(),
            p.width_m(),
            p.stations().len(),
            min_clear
        );
        let _ = writeln!(out, "  {notes}");
    }
    Ok(out)
}
