use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irr_bench::smooth_image;
use irr_core::harness::ssim;
use irr_core::numerics::{bilinear_upsample, convolve2, dft2, idft2, Rng};
use std::hint::black_box;

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("dft2");
    for size in [32, 64, 128, 256] {
        let f = smooth_image(size, 1);
        group.bench_with_input(BenchmarkId::from_parameter(size), &f, |b, f| {
            b.iter(|| idft2(&dft2(black_box(f))))
        });
    }
    group.finish();
}

fn convolution(c: &mut Criterion) {
    let f = smooth_image(128, 2);
    let mut group = c.benchmark_group("convolve2_128");
    for k in [3, 7, 11] {
        let kernel = Rng::new(k as u64).uniform_field(k, k, -1.0, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(k), &kernel, |b, kernel| {
            b.iter(|| convolve2(black_box(&f), kernel).unwrap())
        });
    }
    group.finish();
}

fn misc(c: &mut Criterion) {
    let f = smooth_image(64, 3);
    c.bench_function("bilinear_upsample_64x4", |b| {
        b.iter(|| bilinear_upsample(black_box(&f), 4).unwrap())
    });
    let g = smooth_image(256, 4);
    let h = smooth_image(256, 5);
    c.bench_function("ssim_256", |b| b.iter(|| ssim(black_box(&g), &h).unwrap()));
}

criterion_group!(benches, fft, convolution, misc);
criterion_main!(benches);
