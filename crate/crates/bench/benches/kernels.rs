use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use xsense_core::dynamics::PathSampler;
use xsense_core::kernel::{kernel_at, level_generator};
use xsense_core::percolation::medium_range_correlation;
use xsense_core::spectral::{transform, walsh_hadamard};
use xsense_core::{Configuration, DynamicsGraph, FunctionSpec, LatticePatch};

fn fwht(c: &mut Criterion) {
    let mut g = c.benchmark_group("fwht");
    for n in [12usize, 16, 20] {
        let data: Vec<f64> = (0..1usize << n).map(|i| if i.count_ones() % 3 == 0 { 1.0 } else { -1.0 }).collect();
        g.bench_function(format!("butterfly n={n}"), |b| {
            b.iter_batched(|| data.clone(), |mut d| walsh_hadamard(black_box(&mut d)), BatchSize::LargeInput)
        });
    }
    let maj = FunctionSpec::Majority { n: 15 }.build().unwrap();
    g.bench_function("transform majority 15", |b| b.iter(|| transform(black_box(&maj)).unwrap()));
    g.finish();
}

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("exclusion path");
    for (name, graph) in [
        ("complete 1024", DynamicsGraph::complete(1024).unwrap()),
        ("path 1024", DynamicsGraph::path(1024).unwrap()),
        ("grid2d 32", DynamicsGraph::grid2d(32).unwrap()),
    ] {
        let sampler = PathSampler::new(&graph).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let start = Configuration::uniform(graph.vertices(), &mut rng).unwrap();
        g.bench_function(format!("{name} t=1"), |b| {
            b.iter(|| {
                let mut w = start.clone();
                sampler.for_each_event(1.0, &mut rng, |e| w.swap(e.u as usize, e.v as usize));
                w
            })
        });
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("level kernel");
    g.sample_size(20);
    for (n, k) in [(10usize, 3usize), (12, 4), (14, 5)] {
        let gen = level_generator(&DynamicsGraph::complete(n).unwrap(), k).unwrap();
        g.bench_function(format!("complete n={n} k={k}"), |b| b.iter(|| kernel_at(black_box(&gen), 1.0).unwrap()));
    }
    g.finish();
}

fn crossings(c: &mut Criterion) {
    let mut g = c.benchmark_group("crossing");
    let patch = LatticePatch::rhombus(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = Configuration::uniform(128 * 128, &mut rng).unwrap();
    g.bench_function("rhombus 128", |b| b.iter(|| patch.crossing(black_box(&w)).unwrap()));
    g.sample_size(10);
    g.bench_function("medium range n=32, 200 samples", |b| {
        b.iter(|| medium_range_correlation(32, 0.5, 1.0, 12, 200, 3).unwrap())
    });
    g.finish();
}

criterion_group!(benches, fwht, paths, kernels, crossings);
criterion_main!(benches);
