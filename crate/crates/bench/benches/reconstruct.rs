use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cubeshot::canon::extract_multiset;
use cubeshot::shotgun::{reconstruct_r2, reconstruct_r3, verify_equivalence, EquivalenceMode, DEFAULT_ASSEMBLY_BUDGET};
use cubeshot_bench::fair_colouring;

fn from_three_balls(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct_r3");
    group.sample_size(10);
    for n in [8, 10] {
        let ms = extract_multiset(&fair_colouring(n, 3), 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| reconstruct_r3(&ms, DEFAULT_ASSEMBLY_BUDGET).unwrap())
        });
    }
    group.finish();
}

fn from_two_balls(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct_r2");
    group.sample_size(10);
    for n in [6, 8] {
        let ms = extract_multiset(&fair_colouring(n, 5), 2).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| reconstruct_r2(&ms, DEFAULT_ASSEMBLY_BUDGET).unwrap())
        });
    }
    group.finish();
}

fn equivalence(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_equivalence");
    for (n, mode) in [(8, EquivalenceMode::Exact), (10, EquivalenceMode::Fingerprint)] {
        let chi = fair_colouring(n, 9);
        let mut perm: Vec<u32> = (0..n).collect();
        perm.rotate_left(1);
        let lambda = chi.under_automorphism(&perm, cubeshot::Vertex(3));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| verify_equivalence(&chi, &lambda, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, from_three_balls, from_two_balls, equivalence);
criterion_main!(benches);
