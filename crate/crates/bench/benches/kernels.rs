use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use torlab_core::empirical::{spectral_coefficients, DiscreteMeasure};
use torlab_core::rng::replica_stream;
use torlab_core::simulator::{simulate_path, PathStream, ProcessParams, StableSampler};
use torlab_core::spectral::SpectralModel;
use torlab_core::wasserstein::{w1_circle, wp_discrete, CircleMeasure};

fn stable(c: &mut Criterion) {
    let s = StableSampler::new(0.5, 0.01).unwrap();
    let mut rng = replica_stream(1, 0);
    c.bench_function("stable_sample", |b| b.iter(|| black_box(s.sample(&mut rng))));
}

fn path(c: &mut Criterion) {
    let mut g = c.benchmark_group("path_10k_steps");
    for alpha in [0.5, 1.0] {
        let p = ProcessParams::symmetric(alpha, 1, 100.0, 0.01).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(alpha), &p, |b, p| {
            b.iter(|| {
                let mut rng = replica_stream(2, 0);
                let mut s = PathStream::new(p, &mut rng).unwrap();
                let mut acc = 0.0;
                while let Some(x) = s.advance() {
                    acc += x[0];
                }
                black_box(acc)
            })
        });
    }
    g.finish();
}

fn coefficients(c: &mut Criterion) {
    let p = ProcessParams::symmetric(0.5, 3, 10.0, 0.01).unwrap();
    let traj = simulate_path(&p, &mut replica_stream(3, 0), 3).unwrap();
    let model = SpectralModel::build(3, 600).unwrap();
    c.bench_function("coefficients_d3_600_modes_1k_points", |b| {
        b.iter(|| black_box(spectral_coefficients(&traj, &model, 600).unwrap()))
    });
}

fn circle(c: &mut Criterion) {
    let mut rng = replica_stream(4, 0);
    let pts: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
    let mu = CircleMeasure::empirical(&pts).unwrap();
    let u = CircleMeasure::uniform();
    c.bench_function("w1_circle_100k_atoms", |b| b.iter(|| black_box(w1_circle(&mu, &u))));
}

fn network(c: &mut Criterion) {
    let mut g = c.benchmark_group("network_simplex_vs_uniform");
    g.sample_size(10);
    for n in [16usize, 32] {
        let mut rng = replica_stream(5, n as u64);
        let w: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mu = DiscreteMeasure::new(2, n, w.iter().map(|x| x / total).collect()).unwrap();
        let u = DiscreteMeasure::uniform(2, n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n * n), &n, |b, _| {
            b.iter(|| black_box(wp_discrete(&mu, &u, 2.0).unwrap().value))
        });
    }
    g.finish();
}

criterion_group!(benches, stable, path, coefficients, circle, network);
criterion_main!(benches);
