use std::hint::black_box;

use commlab::cinfo::{Distribution, JointDistribution};
use commlab::cproto::{builders, compress_multiround_classical, CompressionParams};
use commlab::ersp::{evaluate_ersp, ErspInstance};
use commlab::linalg::{random_density, random_state};
use commlab::par::Mode;
use commlab::qmath::DensityMatrix;
use commlab::qproto::compress_multiround_quantum;
use commlab::qproto::demos::{argmax_relation, random_two_way};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Mode); 2] = [
    ("sequential", Mode::Sequential),
    ("parallel", Mode::Parallel),
];

fn classical(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tree = builders::random_tree(&mut rng, 4, 4, 2, 4, 3).unwrap();
    let rel = builders::random_relation(&mut rng, 4, 4, 2, 0.7).unwrap();
    let (mx, my) = (Distribution::uniform(4), Distribution::uniform(4));
    let comp = compress_multiround_classical(&tree, &rel, &mx, &my, CompressionParams::new(0.1, 2))
        .unwrap();
    let trials = 20_000;
    let mut g = c.benchmark_group("classical_compressed");
    g.throughput(Throughput::Elements(trials));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| {
            b.iter(|| black_box(comp.evaluate(trials, 3, m).unwrap().errors))
        });
    }
    g.finish();
}

fn quantum_multiround(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_two_way(4, 4, 2, [2, 4, 2], 3, &mut rng).unwrap();
    let rel = argmax_relation(&p).unwrap();
    let mu = JointDistribution::product(&Distribution::uniform(4), &Distribution::uniform(4));
    let comp = compress_multiround_quantum(&p, &rel, &mu, 1, 0.2).unwrap();
    let trials = 20_000;
    let mut g = c.benchmark_group("quantum_multiround");
    g.throughput(Throughput::Elements(trials));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| {
            b.iter(|| black_box(comp.evaluate(trials, 5, m).unwrap().errors))
        });
    }
    g.finish();
}

fn ersp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sigma = DensityMatrix::new(random_density(8, 8, &mut rng)).unwrap();
    let inst = ErspInstance::new(vec![random_state(8, &mut rng)], sigma).unwrap();
    let trials = 50_000;
    let mut g = c.benchmark_group("ersp");
    g.throughput(Throughput::Elements(trials));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| {
            b.iter(|| {
                black_box(
                    evaluate_ersp(&inst, 0, 1 << 20, trials, 7, m)
                        .unwrap()
                        .mean_j,
                )
            })
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = classical, quantum_multiround, ersp
}
criterion_main!(benches);
