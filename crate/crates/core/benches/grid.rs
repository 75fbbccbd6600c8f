//! Parallel vs sequential throughput of the benchmark grid and MC rollouts.
//!
//! With the `parallel` feature each case runs twice: on the global rayon pool
//! and inside a one-thread pool. Without it only the sequential path exists.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use suspense_core::analytic::build_schedule;
use suspense_core::benchmark::{simulate_grid, GridSpec};
use suspense_core::ingest::reference_weights;
use suspense_core::mc::{mc_outcome_probs, McConfig};
use suspense_core::{MatchState, MatchTimeline, RngSeedPolicy, ScoringRates};

type Runner = Box<dyn Fn(&mut (dyn FnMut() + Send))>;

fn modes() -> Vec<(&'static str, Runner)> {
    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("thread pool");
        vec![
            ("parallel", Box::new(|f: &mut (dyn FnMut() + Send)| f())),
            (
                "sequential",
                Box::new(move |f: &mut (dyn FnMut() + Send)| single.install(f)),
            ),
        ]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential", Box::new(|f: &mut (dyn FnMut() + Send)| f()))]
    }
}

fn grid(c: &mut Criterion) {
    let weights = reference_weights();
    let spec = GridSpec {
        lambda_min: 0.0,
        lambda_max: 3.0,
        step: 0.5,
        matches_per_pair: 500,
        unordered: true,
    };
    let seed = RngSeedPolicy::new(1);
    let mut group = c.benchmark_group("grid_28_pairs_x500");
    group.sample_size(10);
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(&mut || {
                    black_box(simulate_grid(&spec, &weights, &seed).unwrap());
                })
            })
        });
    }
    group.finish();
}

fn rollouts(c: &mut Criterion) {
    let rates = ScoringRates::new(1.6, 1.1).unwrap();
    let schedule = build_schedule(rates, &reference_weights(), &MatchTimeline::empty()).unwrap();
    let state = MatchState::kickoff();
    let config = McConfig::new(50_000, RngSeedPolicy::new(2)).unwrap();
    let mut group = c.benchmark_group("mc_outcome_50k");
    group.sample_size(10);
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run(&mut || {
                    black_box(mc_outcome_probs(&state, &schedule, &config, 0));
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, grid, rollouts);
criterion_main!(benches);
