//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs all of them; numeric arguments select a
//! subset, e.g. `cargo test --test acceptance -- 1 4`. The process fails if a
//! criterion outside `KNOWN_FAILURES` fails.

use std::collections::BTreeSet;
use std::time::Instant;

use mumimo::detectors::{compute_receive_filter, Detector, FilterDesign, MlDetector};
use mumimo::estimation::FilterRls;
use mumimo::harness::{
    binomial_ci, run_sweep, run_sweep_with, training_curve, DetectorChoice, EstimatorChoice, Execution, FilterTrainer,
    SweepPoint, SweepResult, TrainingSpec,
};
use mumimo::idd::{bcjr_decode, extrinsic_llr, EffectiveChannel};
use mumimo::linalg::complex_gaussian_matrix;
use mumimo::rng::substream;
use mumimo::sysmodel::{draw_channel, KroneckerFactors};
use mumimo::txchain::{conv_encode, transmit_block, Bit, Qpsk, TrellisSpec};
use mumimo::{CMat, CVec, ScenarioSpec, SystemConfig, C64};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Criteria that fail in this implementation; the reasons are in the README.
const KNOWN_FAILURES: &[u32] = &[6];

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn snr_range(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(f64::from).collect()
}

fn sweep(spec: &ScenarioSpec) -> SweepResult {
    let result = run_sweep(spec).expect("sweep setup");
    if let Some(p) = result.failed_points().next() {
        panic!("{} dB failed: {:?}", p.snr_db, p.failure);
    }
    result
}

fn das16() -> SystemConfig {
    SystemConfig::das(8, 8, 1, 8, 1)
}

fn cas16(users: usize) -> SystemConfig {
    SystemConfig::cas(16, users, 1)
}

/// `a` is better than `b` with non-overlapping 95% intervals.
fn separated(a: &SweepPoint, b: &SweepPoint) -> bool {
    a.ci_high < b.ci_low
}

// ---------------------------------------------------------------- criterion 1

fn max_rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

fn qpsk_block(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    let q = Qpsk::default();
    CMat::from_fn(rows, cols, |_, _| q.map(rng.random_range(0..2), rng.random_range(0..2)))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn zf_defect() -> f64 {
    let mut worst: f64 = 0.0;
    for (i, sys) in [cas16(8), das16(), SystemConfig::cas(32, 4, 2)].iter().enumerate() {
        let factors = KroneckerFactors::for_config(sys).unwrap();
        for t in 0..20 {
            let g = draw_channel(sys, &factors, &mut substream(11, &[i as u64, t]))
                .unwrap()
                .stacked;
            let w = compute_receive_filter(&g, 1.0, 0.1, FilterDesign::Zf).unwrap().w;
            let n = g.ncols();
            worst = worst.max((w.adjoint() * &g - CMat::identity(n, n)).norm());
        }
    }
    worst
}

/// RLS after `n` samples against `(sum r r^H + reg I)^-1 sum r s^H`.
fn rls_vs_batch(delta: f64, reg: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let mut rng = substream(12, &[t]);
        let g = complex_gaussian_matrix(8, 3, &mut rng);
        let s = qpsk_block(3, 200, &mut rng);
        let r = transmit_block(&g, &s, 0.1, &mut rng).unwrap();
        let mut rls = FilterRls::new(8, 3, 1.0, delta).unwrap();
        for l in 0..s.ncols() {
            rls.update(&r.column(l).into_owned(), &s.column(l).into_owned())
                .unwrap();
        }
        let mut corr = &r * r.adjoint();
        for i in 0..8 {
            corr[(i, i)] += C64::new(reg, 0.0);
        }
        let batch = corr.lu().solve(&(&r * s.adjoint())).unwrap();
        worst = worst.max(max_rel(&rls.w, &batch));
    }
    worst
}

fn llr_defect() -> f64 {
    let q = Qpsk::new(1.0);
    let mut rng = substream(13, &[]);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let z = C64::new(unit.sample(&mut rng), unit.sample(&mut rng));
        let channel = EffectiveChannel {
            gain: rng.random_range(0.2..1.2),
            residual_var: rng.random_range(0.1..1.0),
            samples: 1000,
        };
        let priors = [3.0 * unit.sample(&mut rng), 3.0 * unit.sample(&mut rng)];
        let got = extrinsic_llr(z, &channel, priors, &q, false);
        for c in 0..2 {
            let other = 1 - c;
            let mut sides = [Vec::new(), Vec::new()];
            for b0 in 0..2u8 {
                for b1 in 0..2u8 {
                    let bits = [b0, b1];
                    let s = q.map(b0, b1);
                    let like = -(z - s * channel.gain).norm_sqr() / (2.0 * channel.residual_var);
                    // log P(b_other) up to a constant shared by both sides
                    let l = priors[other];
                    let prior = if bits[other] == 0 {
                        -(-l).exp().ln_1p()
                    } else {
                        -l.exp().ln_1p()
                    };
                    sides[bits[c] as usize].push(like + prior);
                }
            }
            let want = log_sum_exp(&sides[0]) - log_sum_exp(&sides[1]);
            worst = worst.max((got[c] - want).abs());
        }
    }
    worst
}

fn bcjr_defect() -> f64 {
    let trellis = TrellisSpec::default();
    let mut rng = substream(14, &[]);
    let noise = Normal::new(0.0, 1.5).unwrap();
    let mut worst: f64 = 0.0;
    for info_len in 1..=10usize {
        let codebook: Vec<(Vec<Bit>, Vec<Bit>)> = (0..1u32 << info_len)
            .map(|m| {
                let u: Vec<Bit> = (0..info_len).map(|i| ((m >> i) & 1) as Bit).collect();
                let c = conv_encode(&u, &trellis);
                (u, c)
            })
            .collect();
        for _ in 0..10 {
            let llr: Vec<f64> = (0..codebook[0].1.len()).map(|_| noise.sample(&mut rng)).collect();
            let metric: Vec<f64> = codebook
                .iter()
                .map(|(_, c)| {
                    c.iter()
                        .zip(&llr)
                        .map(|(&b, l)| if b == 0 { l / 2.0 } else { -l / 2.0 })
                        .sum()
                })
                .collect();
            let app = |bit_of: &dyn Fn(usize) -> Bit| {
                let mut sides = [Vec::new(), Vec::new()];
                for (w, &m) in metric.iter().enumerate() {
                    sides[bit_of(w) as usize].push(m);
                }
                log_sum_exp(&sides[0]) - log_sum_exp(&sides[1])
            };
            let out = bcjr_decode(&llr, &trellis, false).unwrap();
            for i in 0..info_len {
                worst = worst.max((out.info_llr[i] - app(&|w| codebook[w].0[i])).abs());
            }
            for j in 0..llr.len() {
                let want = app(&|w| codebook[w].1[j]);
                if want.is_finite() {
                    worst = worst.max((out.coded_app[j] - want).abs());
                } else if out.coded_app[j].signum() != want.signum() {
                    // bits fixed by the zero tail: only the sign is meaningful after clipping
                    worst = f64::INFINITY;
                }
            }
        }
    }
    worst
}

/// Mismatching decisions between the ML detector and a plain enumeration.
fn ml_mismatches() -> usize {
    let alphabet = Qpsk::new(1.0).points();
    let mut mismatches = 0;
    for n in 1..=4usize {
        let mut rng = substream(15, &[n as u64]);
        for _ in 0..100 {
            let g = complex_gaussian_matrix(6, n, &mut rng);
            let s = qpsk_block(n, 1, &mut rng);
            let r: CVec = transmit_block(&g, &s, 0.5, &mut rng).unwrap().column(0).into_owned();
            let got = MlDetector::new(&g, &alphabet).unwrap().detect(&r).symbols;
            let mut best = (f64::INFINITY, CVec::zeros(n));
            for idx in 0..4usize.pow(n as u32) {
                let cand = CVec::from_fn(n, |j, _| alphabet[(idx / 4usize.pow(j as u32)) % 4]);
                let d = (&r - &g * &cand).norm_squared();
                if d < best.0 {
                    best = (d, cand);
                }
            }
            mismatches += usize::from(got != best.1);
        }
    }
    mismatches
}

fn criterion_1() -> Check {
    let zf = zf_defect();
    let rls_reg = rls_vs_batch(0.01, 0.01);
    let rls_tiny = rls_vs_batch(1e-9, 0.0);
    let llr = llr_defect();
    let bcjr = bcjr_defect();
    let ml = ml_mismatches();
    Check::new(
        zf <= 1e-8 && rls_reg <= 1e-6 && rls_tiny <= 1e-6 && llr <= 1e-10 && bcjr <= 1e-8 && ml == 0,
        format!(
            "zf {zf:.1e}, rls/ls regularized {rls_reg:.1e}, rls(delta=1e-9)/ls {rls_tiny:.1e}, \
             llr {llr:.1e}, bcjr {bcjr:.1e}, ml mismatches {ml}"
        ),
    )
}

// ----------------------------------------------------------- criteria 2 and 3

struct MultiuserRuns {
    results: Vec<(DetectorChoice, SweepResult)>,
}

fn multiuser_runs() -> MultiuserRuns {
    let mut spec = ScenarioSpec::new(cas16(8), snr_range(0, 20, 4));
    spec.packets = 2000;
    spec.branches = 4;
    let results = [
        DetectorChoice::Rmf,
        DetectorChoice::Mmse,
        DetectorChoice::Sic,
        DetectorChoice::MbSic,
    ]
    .into_iter()
    .map(|d| {
        spec.detector = d;
        (d, sweep(&spec))
    })
    .collect();
    MultiuserRuns { results }
}

fn point_at(result: &SweepResult, snr: f64) -> &SweepPoint {
    result.points.iter().find(|p| p.snr_db == snr).expect("swept SNR")
}

fn criterion_2(runs: &MultiuserRuns) -> Check {
    let at = |d: DetectorChoice| point_at(&runs.results.iter().find(|(x, _)| *x == d).unwrap().1, 12.0);
    let chain = [
        DetectorChoice::MbSic,
        DetectorChoice::Sic,
        DetectorChoice::Mmse,
        DetectorChoice::Rmf,
    ];
    // two bits per symbol, eight streams per vector
    let vectors = at(DetectorChoice::Rmf).bits / 16;
    let mut pass = vectors >= 200_000;
    let mut detail = Vec::new();
    for pair in chain.windows(2) {
        let (a, b) = (at(pair[0]), at(pair[1]));
        let ok = a.ber <= b.ber && (separated(a, b) || b.ber >= 1.1 * a.ber);
        pass &= ok;
        detail.push(format!(
            "{} {:.3e} <= {} {:.3e} [{}]",
            pair[0].name(),
            a.ber,
            pair[1].name(),
            b.ber,
            if ok { "ok" } else { "x" }
        ));
    }
    Check::new(pass, format!("{vectors} vectors at 12 dB: {}", detail.join(", ")))
}

fn criterion_3(runs: &MultiuserRuns) -> Check {
    let mut spec = ScenarioSpec::new(cas16(1), snr_range(0, 20, 4));
    spec.detector = DetectorChoice::Rmf;
    spec.snr_streams = Some(8);
    spec.packets = 16_000;
    let single = sweep(&spec);
    let mut pass = true;
    let mut detail = Vec::new();
    for p in &single.points {
        let best = runs
            .results
            .iter()
            .map(|(_, r)| point_at(r, p.snr_db))
            .min_by(|a, b| a.ber.total_cmp(&b.ber))
            .unwrap();
        let ok = runs.results.iter().all(|(_, r)| separated(p, point_at(r, p.snr_db)));
        pass &= ok;
        detail.push(format!(
            "{} dB {:.3e}<{:.3e}{}",
            p.snr_db,
            p.ber,
            best.ber,
            if ok { "" } else { " x" }
        ));
    }
    Check::new(pass, format!("single-user vs best multiuser: {}", detail.join(", ")))
}

// ---------------------------------------------------------------- criterion 4

fn coded_spec() -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(das16(), vec![8.0]);
    spec.coding = true;
    spec.idd.iterations = 4;
    spec.packets = 100;
    spec
}

fn criterion_4() -> (Check, String) {
    let spec = coded_spec();
    let coded = sweep(&spec);
    let p = &coded.points[0];
    let ci = |it: usize| binomial_ci(p.iteration_errors[it], p.bits);
    let (first, last) = (p.iteration_ber(0).unwrap(), p.iteration_ber(3).unwrap());
    let mut plain = ScenarioSpec::new(das16(), vec![8.0]);
    plain.packets = 100;
    let uncoded = sweep(&plain);
    let u = &uncoded.points[0];
    let iter_ok = last <= first && ci(3).1 < ci(0).0;
    let coded_ok = separated(p, u);
    (
        Check::new(
            iter_ok && coded_ok,
            format!(
                "8 dB: iteration 1 {first:.3e}, iteration 4 {last:.3e}, uncoded MMSE {:.3e} [{}/{}]",
                u.ber,
                if iter_ok { "ok" } else { "x" },
                if coded_ok { "ok" } else { "x" }
            ),
        ),
        coded.to_csv_string().unwrap(),
    )
}

// ---------------------------------------------------------------- criterion 5

/// SNR where the BER curve crosses `target`, interpolated linearly in log BER.
fn snr_at(result: &SweepResult, target: f64) -> Option<f64> {
    result.points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ber >= target && b.ber <= target && a.ber > b.ber {
            let frac = (a.ber.log10() - target.log10()) / (a.ber.log10() - b.ber.log10());
            Some(a.snr_db + frac * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

fn criterion_5() -> Check {
    let run = |estimator: EstimatorChoice| {
        let mut spec = ScenarioSpec::new(das16(), snr_range(0, 20, 2));
        spec.packets = 200;
        spec.data_len = 1250;
        spec.estimator = estimator;
        if estimator != EstimatorChoice::Perfect {
            spec.pilot_len = 250;
        }
        snr_at(&sweep(&spec), 1e-2)
    };
    let perfect = run(EstimatorChoice::Perfect);
    let rls = run(EstimatorChoice::Rls);
    let lms = run(EstimatorChoice::Lms);
    let gap = |x: Option<f64>| match (x, perfect) {
        (Some(x), Some(p)) => x - p,
        _ => f64::INFINITY,
    };
    let (g_rls, g_lms) = (gap(rls), gap(lms));
    Check::new(
        perfect.is_some() && g_rls <= 2.5 && g_rls <= g_lms,
        format!("SNR at BER 1e-2: perfect {perfect:.2?} dB, RLS gap {g_rls:.2} dB, LMS gap {g_lms:.2} dB"),
    )
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Check {
    let mut checkpoints: Vec<usize> = (1..=20).map(|i| 5 * i).collect();
    checkpoints.extend((6..=15).map(|i| 20 * i));
    checkpoints.extend((4..=15).map(|i| 100 * i));
    let spec = TrainingSpec {
        system: SystemConfig::cas(64, 5, 1),
        snr_db: 15.0,
        lambda: 0.999,
        checkpoints,
        test_len: 200,
        trials: 50,
        seed: 1,
    };
    let rls = training_curve(&spec, FilterTrainer::Rls).unwrap();
    let threshold = 2.0 * rls.ber().last().unwrap();
    let reach = |t: FilterTrainer| training_curve(&spec, t).unwrap().symbols_to_reach(threshold);
    let n_rls = rls.symbols_to_reach(threshold);
    let n_krylov = reach(FilterTrainer::Krylov { rank: 5 });
    let n_jio = reach(FilterTrainer::Jio { rank: 5 });
    let within_half = |n: Option<usize>| matches!((n, n_rls), (Some(n), Some(r)) if 2 * n <= r);
    let le = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        _ => false,
    };
    let savings = within_half(n_krylov) && within_half(n_jio);
    let ranking = le(n_jio, n_krylov) && le(n_krylov, n_rls);
    Check::new(
        threshold > 0.0 && savings && ranking,
        format!(
            "threshold {threshold:.2e}, symbols to reach: RLS {n_rls:?}, Krylov {n_krylov:?}, JIO {n_jio:?} \
             [savings {}, ranking {}]",
            if savings { "ok" } else { "x" },
            if ranking { "ok" } else { "x" }
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn das_cas_spec(system: SystemConfig) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(system, snr_range(0, 16, 4));
    spec.packets = 200;
    spec
}

fn criterion_7() -> (Check, String) {
    let das = sweep(&das_cas_spec(das16()));
    let cas = sweep(&das_cas_spec(cas16(8)));
    let mut ordered = true;
    let mut separated_points = 0;
    let mut detail = Vec::new();
    for (d, c) in das.points.iter().zip(&cas.points) {
        ordered &= d.ber <= c.ber;
        separated_points += usize::from(separated(d, c));
        detail.push(format!("{} dB {:.2e}/{:.2e}", d.snr_db, d.ber, c.ber));
    }
    let n = das.points.len();
    (
        Check::new(
            ordered && 2 * separated_points >= n,
            format!(
                "DAS/CAS MMSE: {}; separated at {separated_points}/{n}",
                detail.join(", ")
            ),
        ),
        das.to_csv_string().unwrap(),
    )
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8(first_runs: &[(&str, ScenarioSpec, Option<String>)]) -> Check {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spec, earlier) in first_runs {
        let a = match earlier {
            Some(csv) => csv.clone(),
            None => run_sweep(spec).unwrap().to_csv_string().unwrap(),
        };
        let b = run_sweep_with(spec, Execution::Serial)
            .unwrap()
            .to_csv_string()
            .unwrap();
        let same = a == b;
        pass &= same;
        detail.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
    }
    Check::new(
        pass,
        format!("rerun with the same seed (serial vs parallel): {}", detail.join(", ")),
    )
}

// ---------------------------------------------------------------------- main

fn main() {
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);
    let mut outcomes: Vec<(u32, Check, f64)> = Vec::new();
    let mut report = |id: u32, check: Check, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id}: {} ({secs:.0} s) {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        );
        outcomes.push((id, check, secs));
    };

    if wanted(1) {
        let t = Instant::now();
        report(1, criterion_1(), t);
    }
    if wanted(2) || wanted(3) {
        let t = Instant::now();
        let runs = multiuser_runs();
        if wanted(2) {
            report(2, criterion_2(&runs), t);
        }
        if wanted(3) {
            let t = Instant::now();
            report(3, criterion_3(&runs), t);
        }
    }
    let mut coded_csv = None;
    if wanted(4) {
        let t = Instant::now();
        let (check, csv) = criterion_4();
        coded_csv = Some(csv);
        report(4, check, t);
    }
    if wanted(5) {
        let t = Instant::now();
        report(5, criterion_5(), t);
    }
    if wanted(6) {
        let t = Instant::now();
        report(6, criterion_6(), t);
    }
    let mut das_csv = None;
    if wanted(7) {
        let t = Instant::now();
        let (check, csv) = criterion_7();
        das_csv = Some(csv);
        report(7, check, t);
    }
    if wanted(8) {
        let t = Instant::now();
        let runs = [
            ("coded DAS", coded_spec(), coded_csv),
            ("uncoded DAS sweep", das_cas_spec(das16()), das_csv),
        ];
        report(8, criterion_8(&runs), t);
    }

    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|(id, c, _)| !c.pass && !KNOWN_FAILURES.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    for (id, c, _) in &outcomes {
        if c.pass && KNOWN_FAILURES.contains(id) {
            println!("note: criterion {id} is listed as a known failure but passed");
        }
    }
    let known: Vec<u32> = outcomes
        .iter()
        .filter(|(id, c, _)| !c.pass && KNOWN_FAILURES.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    println!(
        "acceptance: {} passed, {} failed (known: {known:?})",
        outcomes.iter().filter(|(_, c, _)| c.pass).count(),
        outcomes.len() - outcomes.iter().filter(|(_, c, _)| c.pass).count()
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
