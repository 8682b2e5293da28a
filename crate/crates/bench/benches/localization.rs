use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pitbot_core::navloc::{
    run_localization_mc, trilaterate, FixChannel, McParams, RangeObservation, Side,
};
use pitbot_core::simcore::{run, Scenario};
use pitbot_core::PoseEstimate;

fn localization(c: &mut Criterion) {
    let a1 = PoseEstimate::exact(0.0, -3.5);
    let a2 = PoseEstimate::exact(0.0, 3.5);
    let r = RangeObservation::new(7.0, 1.75e-4);
    c.bench_function("trilaterate", |b| {
        b.iter(|| trilaterate(black_box(&a1), black_box(&a2), r, r, Side::Right).unwrap())
    });

    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for channel in [FixChannel::Stereo, FixChannel::Laser] {
        let mut p = McParams::default();
        p.localization.channel = channel;
        group.bench_function(format!("{channel:?}_143_legs_100_trials"), |b| {
            b.iter(|| run_localization_mc(black_box(&p), 100, 42).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("mission");
    group.sample_size(10);
    let sc = Scenario::preset("zigzag_tube", 500.0, 7);
    group.bench_function("zigzag_500m", |b| b.iter(|| run(black_box(&sc)).unwrap()));
    group.finish();
}

criterion_group!(benches, localization);
criterion_main!(benches);
