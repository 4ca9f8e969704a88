use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use ucf_bench::dataset;
use ucf_core::{build_distances, cluster_silhouette, dbscan, run_epoch, DistanceKind, EpochConfig};

const SIZES: [usize; 3] = [10, 25, 50];

fn jaccard(c: &mut Criterion) {
    let mut group = c.benchmark_group("jaccard");
    for ids in SIZES {
        let data = dataset(ids, 40, 0);
        group.bench_with_input(BenchmarkId::from_parameter(ids * 40), &data, |b, d| {
            b.iter(|| build_distances(black_box(&d.main), DistanceKind::Jaccard, 30).unwrap())
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("dbscan");
    for ids in SIZES {
        let data = dataset(ids, 40, 0);
        let dist = build_distances(&data.main, DistanceKind::Jaccard, 30).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(ids * 40), &dist, |b, d| {
            b.iter(|| dbscan(black_box(d), 0.6, 4).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("silhouette");
    for ids in SIZES {
        let data = dataset(ids, 40, 0);
        let dist = build_distances(&data.main, DistanceKind::Jaccard, 30).unwrap();
        let labels = dbscan(&dist, 0.6, 4).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(ids * 40), &labels, |b, l| {
            b.iter(|| cluster_silhouette(black_box(&dist), l, 0.0))
        });
    }
    group.finish();
}

fn epoch(c: &mut Criterion) {
    let data = dataset(10, 40, 0);
    let cfg = EpochConfig::default();
    c.bench_function("epoch/400", |b| {
        b.iter(|| run_epoch(black_box(&data.main), &data.mean, &cfg, Some(&data.truth)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = jaccard, clustering, epoch
}
criterion_main!(benches);
