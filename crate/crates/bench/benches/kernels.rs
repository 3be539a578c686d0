//! Throughput of the sampling, enumeration and estimation kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gibbs_tv::counter::ratio_estimate;
use gibbs_tv::estimate::additive_tv;
use gibbs_tv::{
    rng_from_seed, CounterConfig, EstimatorBudget, ExactDistribution, Field, Graph, HardcoreModel,
    IsingModel, Pinning, Sampler, SamplerConfig, SpinSystem,
};

fn hardcore(graph: Graph, lambda: f64) -> SpinSystem {
    HardcoreModel::uniform(graph, lambda)
        .expect("valid hardcore model")
        .into()
}

fn glauber(c: &mut Criterion) {
    let config = SamplerConfig {
        exact_fallback_cap: 0,
        ..SamplerConfig::default()
    };
    let mut group = c.benchmark_group("glauber_draw");
    for side in [4usize, 6, 8] {
        let n = side * side;
        let models = [
            ("hardcore", hardcore(Graph::grid(side, side), 0.5)),
            (
                "ising",
                IsingModel::uniform(Graph::grid(side, side), 0.2, vec![Field::Finite(0.1); n])
                    .unwrap()
                    .into(),
            ),
        ];
        for (name, model) in models {
            let sampler = Sampler::new(&model, &Pinning::free(n), 0.01, &config).unwrap();
            let mut rng = rng_from_seed(1);
            group.bench_with_input(BenchmarkId::new(name, n), &sampler, |b, s| {
                b.iter(|| black_box(s.draw(&mut rng)))
            });
        }
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for n in [10usize, 14, 18] {
        let model = hardcore(Graph::cycle(n).unwrap(), 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &model, |b, m| {
            b.iter(|| black_box(ExactDistribution::of(m, 20).unwrap()))
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let graph = Graph::cycle(12).unwrap();
    let (mu, nu) = (hardcore(graph.clone(), 0.8), hardcore(graph, 0.9));
    let budget = EstimatorBudget::default();
    let mut group = c.benchmark_group("estimators");
    group.sample_size(10);
    group.bench_function("additive_eps_0.1", |b| {
        let mut rng = rng_from_seed(2);
        b.iter(|| black_box(additive_tv(&mu, &nu, 0.1, &budget, &mut rng).unwrap()))
    });
    group.bench_function("ratio_eps_0.1", |b| {
        let mut rng = rng_from_seed(3);
        let (counter, sampler) = (CounterConfig::default(), SamplerConfig::default());
        b.iter(|| black_box(ratio_estimate(&mu, &nu, 0.1, &counter, &sampler, &mut rng).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, glauber, enumeration, estimators);
criterion_main!(benches);
