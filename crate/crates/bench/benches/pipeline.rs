use std::hint::black_box;

use chainid_bench::{planted, reversible, stationary};
use chainid_core::config::Constants;
use chainid_core::identity::{identity_test, TestConfig};
use chainid_core::iid_test::{iid_sample_size, iid_test};
use chainid_core::partition::{partition_states, solve_spccc_lp};
use chainid_core::{metrics, sampling, subset};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("spccc_lp");
    for d in [6, 8, 12, 16] {
        let p = reversible(d, d as u64);
        group.bench_with_input(BenchmarkId::from_parameter(d), &p, |b, p| {
            b.iter(|| solve_spccc_lp(p, &subset::full(p.d()), &[]).unwrap())
        });
    }
    group.finish();
}

fn partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition");
    group.sample_size(20);
    for (blocks, size) in [(2, 3), (3, 4), (4, 4)] {
        let p = planted(blocks, size);
        group.bench_with_input(BenchmarkId::new("planted", blocks * size), &p, |b, p| {
            b.iter(|| partition_states(p, 0.1, 0).unwrap())
        });
    }
    group.finish();
}

fn simulate(c: &mut Criterion) {
    let p = reversible(8, 1);
    let pi = stationary(&p);
    c.bench_function("simulate_100k", |b| b.iter(|| sampling::simulate(&p, &pi, 100_000, black_box(7)).unwrap()));
}

fn iid(c: &mut Criterion) {
    let constants = Constants::default();
    let mut group = c.benchmark_group("iid_test");
    for n in [10, 50, 200] {
        let pbar = vec![1.0 / n as f64; n];
        let m = iid_sample_size(n, 0.1, 0.1, &constants).unwrap();
        let samples: Vec<usize> = (0..m).map(|k| (k * 7919) % n).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &samples, |b, s| {
            b.iter(|| iid_test(s, &pbar, 0.1, 0.1, 3, &constants).unwrap())
        });
    }
    group.finish();
}

fn distance(c: &mut Criterion) {
    let p = reversible(32, 2);
    let q = reversible(32, 3);
    c.bench_function("chain_distance_32", |b| b.iter(|| metrics::chain_distance(&p, &q).unwrap()));
}

fn end_to_end(c: &mut Criterion) {
    let p = reversible(4, 5);
    let pi = stationary(&p);
    let traj = sampling::simulate(&p, &pi, 50_000, 11).unwrap();
    let cfg = TestConfig::new(0.5, 1);
    let mut group = c.benchmark_group("identity_test");
    group.sample_size(10);
    group.bench_function("d4_50k", |b| b.iter(|| identity_test(&p, &traj, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, lp, partition, simulate, iid, distance, end_to_end);
criterion_main!(benches);
