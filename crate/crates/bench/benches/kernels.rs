use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use heightlab_core::enumeration::{enumerate_shell, ShellQuery};
use heightlab_core::geometry::ball_volume_arch;
use heightlab_core::padic_volume::{ball_volume_padic, sphere_volume, sphere_volume_oracle};
use heightlab_core::{HaarCalibration, MetricChoice, PlaceSet, RealizableHeight, RegionE};

fn shells(c: &mut Criterion) {
    let s = PlaceSet::with_primes([2]).unwrap();
    let e = RegionE::ball_at_identity(1.0, MetricChoice::Frobenius).unwrap();
    let mut g = c.benchmark_group("enumerate_shell");
    g.sample_size(10);
    for k in [4u32, 6, 7] {
        let h = RealizableHeight::from_value(1 << k, &s).unwrap();
        let q = ShellQuery::new(s.clone(), h, e.clone(), None, None).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(1 << k), &q, |b, q| b.iter(|| enumerate_shell(q).unwrap().len()));
    }
    g.finish();
}

fn padic(c: &mut Criterion) {
    let s = PlaceSet::with_primes([2, 3, 5]).unwrap();
    c.bench_function("sphere_volume formula p=7 k=3", |b| b.iter(|| sphere_volume(black_box(7), black_box(3))));
    c.bench_function("sphere_volume oracle p=7 k=2", |b| b.iter(|| sphere_volume_oracle(black_box(7), black_box(2)).unwrap()));
    c.bench_function("ball_volume_padic {2,3,5} h=10^4", |b| b.iter(|| ball_volume_padic(&s, black_box(10_000))));
}

fn archimedean(c: &mut Criterion) {
    let cal = HaarCalibration::analytic();
    let mut g = c.benchmark_group("ball_volume_arch 2^16 samples");
    g.sample_size(10);
    for metric in [MetricChoice::Frobenius, MetricChoice::LogInvariant] {
        g.bench_function(metric.as_str(), |b| b.iter(|| ball_volume_arch(0.1, metric, &cal, 1 << 16, 1).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, shells, padic, archimedean);
criterion_main!(benches);
