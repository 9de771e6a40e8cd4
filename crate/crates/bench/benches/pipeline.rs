use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use coopbatch_bench::bench_graph;
use coopbatch_core::coop::{
    coop_sample, coop_train_step, synthetic_labels, FeatureStore, GcnModel, TrainInputs,
};
use coopbatch_core::partition::partition_random;
use coopbatch_core::samplers::{expand, sample_seed_vertices};
use coopbatch_core::{SamplerConfig, SamplerKind, VariateSource};

const N: usize = 20_000;

fn expansion(c: &mut Criterion) {
    let g = bench_graph(N);
    let seeds = sample_seed_vertices(N, 256, 1).unwrap();
    let source = VariateSource::plain(2);
    let mut group = c.benchmark_group("expand_l3_b256");
    for kind in SamplerKind::SAMPLED {
        let cfg = SamplerConfig::new(kind);
        group.bench_with_input(BenchmarkId::from_parameter(kind), &cfg, |b, cfg| {
            b.iter(|| expand(&g, black_box(&seeds), 3, cfg, &source).unwrap())
        });
    }
    group.finish();
}

fn smoothed_expansion(c: &mut Criterion) {
    let g = bench_graph(N);
    let seeds = sample_seed_vertices(N, 256, 1).unwrap();
    let cfg = SamplerConfig::new(SamplerKind::Labor0);
    let mut group = c.benchmark_group("labor0_source");
    for (name, source) in [
        ("plain", VariateSource::plain(3)),
        ("smoothed", VariateSource::smoothed(3, 4, 0.5)),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| expand(&g, black_box(&seeds), 3, &cfg, &source).unwrap())
        });
    }
    group.finish();
}

fn cooperative(c: &mut Criterion) {
    let g = bench_graph(N);
    let cfg = SamplerConfig::new(SamplerKind::Labor0);
    let source = VariateSource::plain(5);
    let global = sample_seed_vertices(N, 1024, 6).unwrap();
    let mut group = c.benchmark_group("coop_sample_l3_b1024");
    for parts in [1usize, 4] {
        let pm = partition_random(N, parts, 7).unwrap();
        let per_pe = pm.split_by_owner(&global);
        group.bench_with_input(BenchmarkId::from_parameter(parts), &per_pe, |b, per_pe| {
            b.iter(|| coop_sample(&g, &pm, black_box(per_pe), 3, &cfg, &source).unwrap())
        });
    }
    group.finish();
}

fn train_step(c: &mut Criterion) {
    let g = bench_graph(N);
    let cfg = SamplerConfig::new(SamplerKind::Labor0);
    let model = GcnModel::init(&[4, 16, 16, 16], 8).unwrap();
    let labels = synthetic_labels(N, 4, 9);
    let mut store = FeatureStore::synthetic(N, 16, 10);
    let inputs = TrainInputs {
        graph: &g,
        sampler: &cfg,
        source: VariateSource::plain(11),
        model: &model,
        labels: &labels,
    };
    let pm = partition_random(N, 4, 12).unwrap();
    let per_pe = pm.split_by_owner(&sample_seed_vertices(N, 512, 13).unwrap());
    c.bench_function("coop_train_step_p4_b512", |b| {
        b.iter(|| coop_train_step(&inputs, &pm, black_box(&per_pe), &mut store).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = expansion, smoothed_expansion, cooperative, train_step
}
criterion_main!(benches);
