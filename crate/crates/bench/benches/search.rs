use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pdpsearch::flow::flow_value;
use pdpsearch::generators::gnp;
use pdpsearch::{
    ptarget, sfs, target, Epsilon, NoiseMode, NoiseSource, ProximityStatistic, SearchParams, Sop,
    SopDescriptor, VertexSet,
};
use pdpsearch_bench::infected_small_world;

fn bench_sfs(c: &mut Criterion) {
    let mut group = c.benchmark_group("sfs");
    for n in [500, 2000] {
        let (g, pop) = infected_small_world(n, 0.1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| sfs(black_box(&g), &pop, 0).unwrap())
        });
    }
    group.finish();
}

fn bench_targeting(c: &mut Criterion) {
    let (g, pop) = infected_small_world(2000, 0.5);
    let sop = SopDescriptor::for_graph(Sop::CommonNeighbors, &g).unwrap();
    let params = SearchParams::new(sop, 10, 20)
        .with_epsilon(Epsilon::new(0.05).unwrap())
        .with_mode(NoiseMode::Standard)
        .with_max_queries(800);
    c.bench_function("target/cn/2000", |b| {
        b.iter(|| target(&g, &pop, 0, black_box(&params)).unwrap())
    });
    let mut stream = 0;
    c.bench_function("ptarget/cn/2000", |b| {
        b.iter(|| {
            stream += 1;
            ptarget(
                &g,
                &pop,
                0,
                black_box(&params),
                &mut NoiseSource::new(1, stream),
            )
            .unwrap()
        })
    });
}

fn bench_statistics(c: &mut Criterion) {
    let (g, pop) = infected_small_world(2000, 0.1);
    let discovered = pop.targeted();
    let candidates: Vec<usize> = g.vertices().filter(|v| !discovered.contains(v)).collect();
    let mut group = c.benchmark_group("evaluate_many");
    for sop in [Sop::CommonNeighbors, Sop::Path { k: 2 }, Sop::Triangle] {
        group.bench_function(sop.to_string(), |b| {
            b.iter(|| {
                sop.evaluate_many(&g, black_box(&candidates), &discovered)
                    .unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("flow_lp");
    group.sample_size(10);
    let g = gnp(40, 0.1, 3);
    let targets: VertexSet = (1..12).collect();
    for k in [2, 3, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| flow_value(black_box(&g), 0, &targets, k).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sfs, bench_targeting, bench_statistics);
criterion_main!(benches);
