use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use mumimo::detectors::{
    compute_ordering, compute_receive_filter, Detector, FilterDesign, LinearDetector, MbSicDetector, MlDetector,
    OrderingCriterion, SicDetector,
};
use mumimo::estimation::{FilterRls, JioRls, KrylovRls, DEFAULT_DELTA};
use mumimo::harness::{ScenarioSpec, Simulation};
use mumimo::idd::bcjr_decode;
use mumimo::linalg::complex_gaussian_matrix;
use mumimo::rng::substream;
use mumimo::sysmodel::{draw_channel, KroneckerFactors};
use mumimo::txchain::{transmit_block, Qpsk, TrellisSpec};
use mumimo::{CMat, CVec, SystemConfig};
use rand::Rng;

const NOISE: f64 = 0.05;

fn setup(n_rx: usize, streams: usize) -> (CMat, CMat) {
    let mut rng = substream(7, &[n_rx as u64, streams as u64]);
    let g = complex_gaussian_matrix(n_rx, streams, &mut rng);
    let pts = Qpsk::default().points();
    let s = CMat::from_fn(streams, 256, |_, _| pts[rng.random_range(0..4)]);
    let r = transmit_block(&g, &s, NOISE, &mut rng).unwrap();
    (g, r)
}

fn channel(c: &mut Criterion) {
    for (name, sys) in [
        ("cas-64x32", SystemConfig::cas(64, 32, 1)),
        ("das-32+32x16x2", SystemConfig::das(32, 32, 1, 16, 2)),
    ] {
        let factors = KroneckerFactors::for_config(&sys).unwrap();
        let mut rng = substream(1, &[]);
        c.bench_function(&format!("draw_channel/{name}"), |b| {
            b.iter(|| draw_channel(&sys, &factors, &mut rng).unwrap())
        });
    }
}

fn detectors(c: &mut Criterion) {
    let q = Qpsk::default();
    let (g, r) = setup(16, 8);
    let mmse = compute_receive_filter(&g, 1.0, NOISE, FilterDesign::Mmse).unwrap();
    let order = compute_ordering(&g, 1.0, NOISE, OrderingCriterion::Sinr, None).unwrap();
    let linear = LinearDetector::new(&mmse, q);
    let sic = SicDetector::new(&g, 1.0, NOISE, &order, FilterDesign::Mmse, q).unwrap();
    let mb = MbSicDetector::new(&g, 1.0, NOISE, &order, 4, FilterDesign::Mmse, q).unwrap();
    let mut group = c.benchmark_group("detect_256_vectors/16x8");
    group.bench_function("mmse_filter", |b| {
        b.iter(|| compute_receive_filter(black_box(&g), 1.0, NOISE, FilterDesign::Mmse).unwrap())
    });
    group.bench_function("mmse", |b| b.iter(|| linear.detect_block(black_box(&r))));
    group.bench_function("sic", |b| b.iter(|| sic.detect_block(black_box(&r))));
    group.bench_function("mb-sic-4", |b| b.iter(|| mb.detect_block(black_box(&r))));
    group.finish();

    let (g4, r4) = setup(8, 4);
    let ml = MlDetector::new(&g4, &q.points()).unwrap();
    c.bench_function("detect_256_vectors/ml-8x4", |b| {
        b.iter(|| ml.detect_block(black_box(&r4)))
    });
}

fn decoder(c: &mut Criterion) {
    let trellis = TrellisSpec::default();
    let mut rng = substream(3, &[]);
    let llr: Vec<f64> = (0..3000).map(|_| rng.random_range(-4.0..4.0)).collect();
    c.bench_function("bcjr/1500_steps", |b| {
        b.iter(|| bcjr_decode(black_box(&llr), &trellis, false).unwrap())
    });
    c.bench_function("bcjr/1500_steps_maxlog", |b| {
        b.iter(|| bcjr_decode(black_box(&llr), &trellis, true).unwrap())
    });
}

fn adaptive(c: &mut Criterion) {
    let (_, r) = setup(64, 8);
    let mut rng = substream(4, &[]);
    let pts = Qpsk::default().points();
    let s = CMat::from_fn(8, r.ncols(), |_, _| pts[rng.random_range(0..4)]);
    let cols: Vec<(CVec, CVec)> = (0..r.ncols())
        .map(|l| (r.column(l).into_owned(), s.column(l).into_owned()))
        .collect();
    let mut group = c.benchmark_group("train_256_samples/64x8");
    group.bench_function("rls", |b| {
        b.iter_batched(
            || FilterRls::new(64, 8, 0.999, DEFAULT_DELTA).unwrap(),
            |mut st| {
                for (rv, sv) in &cols {
                    st.update(rv, sv).unwrap();
                }
                st
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("krylov-d5", |b| {
        b.iter_batched(
            || KrylovRls::new(64, 8, 5, 0.999, DEFAULT_DELTA).unwrap(),
            |mut st| {
                for (rv, sv) in &cols {
                    st.update(rv, sv).unwrap();
                }
                st.filters().unwrap()
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("jio-d5", |b| {
        b.iter_batched(
            || JioRls::new(64, 8, 5, 0.999, DEFAULT_DELTA).unwrap(),
            |mut st| {
                for (rv, sv) in &cols {
                    st.update(rv, sv).unwrap();
                }
                st
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn trials(c: &mut Criterion) {
    let mut spec = ScenarioSpec::new(SystemConfig::cas(16, 8, 1), vec![12.0]);
    let mut group = c.benchmark_group("trial");
    group.sample_size(10);
    let sim = Simulation::new(&spec).unwrap();
    group.bench_function("uncoded-mmse-16x8", |b| b.iter(|| sim.run_trial(12.0, 0).unwrap()));
    spec.coding = true;
    let sim = Simulation::new(&spec).unwrap();
    group.bench_function("idd-4-16x8", |b| b.iter(|| sim.run_trial(12.0, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, channel, detectors, decoder, adaptive, trials);
criterion_main!(benches);
