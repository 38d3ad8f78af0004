use chrono::Weekday;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ridehail::graph::{fastest_path, mini_berlin, RoadGraph, SpeedProfile, TurnCostModel};
use ridehail::hotspots::dbscan;
use ridehail::logbook::{synthesize_demand, DemandParams};
use ridehail::sim::{run_simulation, Strategy};
use ridehail::{LatLon, Scenario};
use std::hint::black_box;

fn routing(c: &mut Criterion) {
    let g = RoadGraph::from_file(&mini_berlin(), TurnCostModel::default()).unwrap();
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(usize, usize)> = (0..64).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
    let profile = SpeedProfile::uniform();
    c.bench_function("fastest_path mini-berlin x64", |b| {
        b.iter(|| {
            for &(o, d) in &pairs {
                black_box(fastest_path(&g, o, d, 28_800.0, &profile).unwrap());
            }
        })
    });
}

fn clustering(c: &mut Criterion) {
    let orders = synthesize_demand(&DemandParams { days: 28, ..DemandParams::default() }, 7).unwrap();
    let points: Vec<LatLon> = orders.iter().map(|o| o.pickup_location).collect();
    let mut group = c.benchmark_group("dbscan");
    group.sample_size(10);
    group.bench_function(format!("{} pick-ups, eps 175 m", points.len()), |b| b.iter(|| black_box(dbscan(&points, 175.0, 10))));
    group.finish();
}

fn sim_day(c: &mut Criterion) {
    let s = Scenario::bundled().unwrap();
    let mut group = c.benchmark_group("simulated day");
    group.sample_size(10);
    for strategy in Strategy::ALL {
        group.bench_function(format!("50 vehicles, Wednesday, {strategy}"), |b| {
            b.iter_batched(
                || (s.logbook(Weekday::Wed, 0).unwrap(), s.config(strategy, 0)),
                |(lb, cfg)| black_box(run_simulation(&cfg, &lb, &s.graph).unwrap()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, routing, clustering, sim_day);
criterion_main!(benches);
