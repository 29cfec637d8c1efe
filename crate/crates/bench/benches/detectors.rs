use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use posmap_bench::{gallery, maps};
use posmap_core::discrimination::{discrimination_witness, reduction_channel_pair};
use posmap_core::linalg::Subsystem;
use posmap_core::moments::{hankel_criterion, map_moments};
use posmap_core::sweep::{grid, scan, Probe, Target};
use posmap_core::{Detector, PositiveMapSpec, StateFamily};

fn moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("map_moments");
    for map in maps() {
        for (name, rho) in gallery() {
            let id = format!("{}/{name}", map.name());
            group.bench_with_input(BenchmarkId::from_parameter(id), &rho, |b, rho| {
                b.iter(|| {
                    let s = map_moments(&map, black_box(rho), 3, 3, 5).unwrap();
                    hankel_criterion(&s, 2).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn discrimination(c: &mut Criterion) {
    c.bench_function("channel_pair/d3_r2", |b| {
        b.iter(|| reduction_channel_pair(black_box(3), 2).unwrap())
    });
    let rho = gallery().remove(0).1;
    c.bench_function("witness/isotropic", |b| {
        b.iter(|| discrimination_witness(black_box(&rho), 3, 2).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let probe = Probe::new(
        Target::State {
            family: StateFamily::DephasedMes,
            d: 3,
            map: PositiveMapSpec::reduction(0.5, 3).unwrap(),
            subsystem: Subsystem::B,
        },
        vec![Detector::T1, Detector::T2],
        2,
        5,
    )
    .unwrap();
    let points = grid(0.0, 1.0, 101).unwrap();
    c.bench_function("scan/dephased_101", |b| b.iter(|| scan(&probe, black_box(&points)).unwrap()));
}

criterion_group!(benches, moments, discrimination, sweep);
criterion_main!(benches);
