use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pitbot_core::hopplan::{plan_min_fuel_hop, sample_trajectory};
use pitbot_core::{BodyConstants, CorridorPoint, PlannerConfig, TubeProfile};

fn planner(c: &mut Criterion) {
    let o = CorridorPoint::on_axis(0.0, 0.0);
    let t = CorridorPoint::on_axis(100.0, 0.0);
    let cfg = PlannerConfig::with_margin(0.0);
    let moon = BodyConstants::MOON;

    c.bench_function("plan_unconstrained_100m", |b| {
        b.iter(|| plan_min_fuel_hop(black_box(o), black_box(t), moon, None, &cfg).unwrap())
    });

    let low = TubeProfile::flat("low", 200.0, 10.0, 10.0, 5.0).unwrap();
    c.bench_function("plan_ceiling_100m", |b| {
        b.iter(|| plan_min_fuel_hop(black_box(o), black_box(t), moon, Some(&low), &cfg).unwrap())
    });

    let zig = TubeProfile::preset("zigzag_tube").unwrap();
    let from = CorridorPoint::new(100.0, 0.875, zig.floor_at(100.0).unwrap() + 0.15);
    let to = CorridorPoint::new(120.3, -0.875, zig.floor_at(120.3).unwrap() + 0.15);
    let leg_cfg = PlannerConfig::default();
    c.bench_function("plan_zigzag_leg", |b| {
        b.iter(|| {
            plan_min_fuel_hop(black_box(from), black_box(to), moon, Some(&zig), &leg_cfg).unwrap()
        })
    });

    let plan = plan_min_fuel_hop(o, t, moon, None, &cfg).unwrap();
    c.bench_function("sample_trajectory_dt_0.05", |b| {
        b.iter(|| sample_trajectory(black_box(&plan), 0.05).unwrap())
    });
}

criterion_group!(benches, planner);
criterion_main!(benches);
