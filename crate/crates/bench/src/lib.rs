//! Criterion benchmarks for the hop planner, localization and full missions;
//! see `benches/`. Run with `cargo bench -p pitbot-bench`.
