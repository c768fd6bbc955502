//! Benchmarks for the heavy paths: Gramian assembly and eigen-solves,
//! gap enumeration, the Diophantine scan, cover construction and the
//! closed-loop integrator.

use std::f64::consts::{PI, SQRT_2};
use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zktorus::control::{build_feedback, full_torus_region, simulate_closed_loop};
use zktorus::diophantine::{certify_bad_approx, IrrationalSpec};
use zktorus::gap_sparse::{build_sparse_cover, CoverOptions, FrequencyFamily, GapNorm};
use zktorus::observability::{
    assemble_gramian, HorizontalSegment, Interval, ObservationRegion, SpatialSet,
};
use zktorus::{SpectralState, Truncation};

pub fn regions() -> Vec<(&'static str, ObservationRegion)> {
    let iv = Interval::new(0.0, 2.0 * PI);
    vec![
        ("vertical", ObservationRegion::vertical(0.0, iv)),
        (
            "two-horizontal",
            ObservationRegion::horizontal(vec![
                HorizontalSegment {
                    y: 0.3,
                    interval: iv,
                },
                HorizontalSegment {
                    y: 0.3 + SQRT_2 * PI,
                    interval: iv,
                },
            ]),
        ),
        (
            "disc",
            ObservationRegion::space_time(
                SpatialSet::Disc {
                    center: [3.0, 3.0],
                    radius: 1.0,
                },
                iv,
            ),
        ),
    ]
}

fn gramians(c: &mut Criterion) {
    let mut group = c.benchmark_group("gramian");
    group.sample_size(20);
    for (name, region) in regions() {
        for max in [4u32, 8] {
            let t = Truncation::new(max, max, true);
            group.bench_with_input(
                BenchmarkId::new(format!("assemble/{name}"), max),
                &t,
                |b, t| b.iter(|| assemble_gramian(black_box(&region), *t).unwrap()),
            );
            let g = assemble_gramian(&region, t).unwrap();
            group.bench_with_input(
                BenchmarkId::new(format!("eigen/{name}"), max),
                &g,
                |b, g| b.iter(|| g.eigen().unwrap()),
            );
        }
    }
    group.finish();
}

fn gaps(c: &mut Criterion) {
    let mut group = c.benchmark_group("gap");
    for max in [8u32, 16, 32] {
        let family = FrequencyFamily::zk(Truncation::square(max)).unwrap();
        group.bench_with_input(BenchmarkId::new("uniform-gap", max), &family, |b, f| {
            b.iter(|| f.uniform_gap(GapNorm::Euclidean))
        });
    }
    group.finish();
}

fn covers(c: &mut Criterion) {
    let mut group = c.benchmark_group("cover");
    group.sample_size(10);
    for (max, eps) in [(8u32, 1.0), (12, 0.5)] {
        let family = FrequencyFamily::zk(Truncation::square(max)).unwrap();
        group.bench_with_input(BenchmarkId::new("zk", max), &family, |b, f| {
            b.iter(|| build_sparse_cover(f, eps, CoverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn diophantine(c: &mut Criterion) {
    let mut group = c.benchmark_group("diophantine");
    group.sample_size(10);
    let theta = IrrationalSpec::sqrt(2);
    for n in [10_000u64, 100_000] {
        group.bench_with_input(BenchmarkId::new("sqrt2-scan", n), &n, |b, &n| {
            b.iter(|| certify_bad_approx(&theta, 1.0, n).unwrap())
        });
    }
    group.finish();
}

fn closed_loop(c: &mut Criterion) {
    let t = Truncation::new(3, 3, true);
    let law = build_feedback(&full_torus_region(2.0 * PI), 1.0, 2.0 * PI, t).unwrap();
    let z0 = SpectralState::random(t, &mut ChaCha8Rng::seed_from_u64(1));
    c.bench_function("closed-loop/torus-1s", |b| {
        b.iter(|| simulate_closed_loop(&law, &z0, 1.0, 1e-3).unwrap())
    });
}

pub fn benchmarks(c: &mut Criterion) {
    gramians(c);
    gaps(c);
    covers(c);
    diophantine(c);
    closed_loop(c);
}
