use annob_bench::{blob_mask, noisy_labels};
use annob_core::raster::connected_components;
use annob_core::{rle_decode, rle_encode, ClassTable, ConfusionMatrix};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

fn rle(c: &mut Criterion) {
    let mut group = c.benchmark_group("rle");
    for (w, h) in [(64, 64), (512, 256), (2048, 1024)] {
        let mask = blob_mask(1, w, h);
        let encoded = rle_encode(&mask);
        group.throughput(Throughput::Elements(u64::from(w * h)));
        group.bench_with_input(
            BenchmarkId::new("encode", format!("{w}x{h}")),
            &mask,
            |b, m| b.iter(|| rle_encode(black_box(m))),
        );
        group.bench_with_input(
            BenchmarkId::new("decode", format!("{w}x{h}")),
            &encoded,
            |b, r| b.iter(|| rle_decode(black_box(r)).unwrap()),
        );
    }
    group.finish();
}

fn components(c: &mut Criterion) {
    let labels = noisy_labels(2, 256, 128, &[0, 0, 0, 13, 255]);
    c.bench_function("connected_components/256x128", |b| {
        b.iter(|| connected_components(black_box(&labels), |v| v != 255))
    });
}

fn confusion(c: &mut Criterion) {
    let table = ClassTable::cityscapes();
    let pred = noisy_labels(3, 1024, 512, &[0, 1, 2, 11, 13, 255]);
    let gt = noisy_labels(4, 1024, 512, &[0, 1, 2, 11, 13, 255]);
    let mut group = c.benchmark_group("confusion");
    group.throughput(Throughput::Elements(1024 * 512));
    group.bench_function("accumulate/1024x512", |b| {
        b.iter(|| {
            let mut cm = ConfusionMatrix::new(&table);
            cm.accumulate(black_box(&pred), black_box(&gt)).unwrap();
            cm
        })
    });
    group.finish();
}

criterion_group!(benches, rle, components, confusion);
criterion_main!(benches);
