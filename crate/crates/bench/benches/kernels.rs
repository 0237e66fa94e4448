use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mmgauss::detection::{p_threshold, pnr_table, Detector, SeriesShape, TruncatedSeries};
use mmgauss::elements::{build_jsa, schmidt_decompose, squeezer, JsaSpec};
use mmgauss::experiments::{build_hhom, HhomConfig};
use mmgauss::{FrequencyGrid, ModeLayout, C64};

const THZ: f64 = TAU * 1e12;
const NU: f64 = 193.1 * THZ;

fn waveguide(xi: f64) -> JsaSpec {
    JsaSpec::waveguide(xi, 0.1 * THZ, 29e-12, NU)
}

fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::spanning(NU, 0.4 * THZ, n).unwrap()
}

fn sources(c: &mut Criterion) {
    let mut g = c.benchmark_group("source");
    for n in [41, 81, 121] {
        let grid = grid(n);
        let j = build_jsa(&waveguide(0.8), &grid, &grid).unwrap();
        g.bench_with_input(BenchmarkId::new("schmidt", n), &j, |b, j| b.iter(|| schmidt_decompose(black_box(j))));
        let layout = ModeLayout::new(4, n).unwrap();
        g.bench_with_input(BenchmarkId::new("squeezer", n), &j, |b, j| {
            b.iter(|| squeezer(black_box(j), 0, 1, layout).unwrap())
        });
    }
    g.finish();
}

fn circuit(c: &mut Criterion) {
    let mut g = c.benchmark_group("hhom_state");
    g.sample_size(10);
    for n in [41, 61] {
        let cfg = HhomConfig::symmetric(waveguide(0.8)).unwrap().with_grid(grid(n)).with_uniform_loss(0.1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| b.iter(|| build_hhom(black_box(cfg)).unwrap()));
    }
    g.finish();
}

fn detection(c: &mut Criterion) {
    let det = Detector::default();
    let mut g = c.benchmark_group("detection");
    g.sample_size(10);
    for n in [41, 61] {
        let cfg = HhomConfig::symmetric(waveguide(0.8)).unwrap().with_grid(grid(n)).with_uniform_loss(0.1);
        let state = build_hhom(&cfg).unwrap();
        g.bench_with_input(BenchmarkId::new("p_threshold_4", n), &state, |b, s| {
            b.iter(|| p_threshold(black_box(s), &[0, 1, 2, 3], &[], &det).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pnr_table_1221", n), &state, |b, s| {
            b.iter(|| pnr_table(black_box(s), &[0, 1, 2, 3], &[1, 2, 2, 1], &det).unwrap())
        });
    }
    g.finish();
}

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    for orders in [vec![1, 2, 2, 1], vec![3, 3, 3, 3]] {
        let shape = SeriesShape::new(&orders);
        let coeffs: Vec<C64> = (0..shape.len()).map(|k| C64::new(1.0 / (k + 1) as f64, 0.1 * k as f64)).collect();
        let x = TruncatedSeries::from_coeffs(&shape, coeffs).unwrap();
        let label = format!("{orders:?}");
        g.bench_with_input(BenchmarkId::new("mul", &label), &x, |b, x| b.iter(|| black_box(x).mul(x)));
        g.bench_with_input(BenchmarkId::new("exp", &label), &x, |b, x| b.iter(|| black_box(x).exp()));
        g.bench_with_input(BenchmarkId::new("ln", &label), &x, |b, x| b.iter(|| black_box(x).ln().unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sources, circuit, detection, series);
criterion_main!(benches);
