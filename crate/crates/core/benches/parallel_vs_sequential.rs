use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vacpol_core::flow::{sweep, ChannelSetup};
use vacpol_core::projector::{matrix_flow_theorem, projector_via_eta_integral, HermitianOperator};
use vacpol_core::radial::RadialGrid;
use vacpol_core::random_models::random_gapped_model;
use vacpol_core::ChargeDensity;

fn radial_sweep() {
    let setup = ChannelSetup::new(ChargeDensity::gaussian(0.02).unwrap(), RadialGrid::new(800, 30.0).unwrap(), 1e-3).unwrap();
    sweep(&setup, &[-2, -1, 1, 2], 1.5, 16).unwrap();
}

fn eta_projector() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (h, _) = random_gapped_model(&mut rng, 24, 0.0, 0.2);
    projector_via_eta_integral(&HermitianOperator::new(h).unwrap(), 0.0, 1e-9).unwrap();
}

fn flow_battery() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lambdas: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
    for _ in 0..4 {
        let (h0, phi) = random_gapped_model(&mut rng, 24, 0.0, 0.3);
        matrix_flow_theorem(&HermitianOperator::new(h0).unwrap(), &HermitianOperator::new(phi).unwrap(), &lambdas, 0.0).unwrap();
    }
}

fn workloads() -> [(&'static str, fn()); 3] {
    [("radial_sweep", radial_sweep), ("eta_projector", eta_projector), ("flow_battery", flow_battery)]
}

#[cfg(feature = "parallel")]
fn backends(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut group = c.benchmark_group("backend");
    group.sample_size(10);
    for (name, work) in workloads() {
        group.bench_function(BenchmarkId::new("rayon", name), |b| b.iter(work));
        group.bench_function(BenchmarkId::new("one_thread", name), |b| b.iter(|| single.install(work)));
    }
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn backends(c: &mut Criterion) {
    let mut group = c.benchmark_group("backend");
    group.sample_size(10);
    for (name, work) in workloads() {
        group.bench_function(BenchmarkId::new("sequential", name), |b| b.iter(work));
    }
    group.finish();
}

criterion_group!(benches, backends);
criterion_main!(benches);
