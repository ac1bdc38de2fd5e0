use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::{serialize_config, ScenarioSpec, Simulation, TrialCounts};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// 95% binomial confidence interval by the normal approximation. With zero
/// (or all) errors the interval degenerates, so the exact one-sided bound
/// `1 - 0.05^(1/n)` is reported instead.
pub fn binomial_ci(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let one_sided = 1.0 - 0.05f64.powf(1.0 / n);
    if errors == 0 {
        return (0.0, one_sided);
    }
    if errors == bits {
        return (1.0 - one_sided, 1.0);
    }
    let p = errors as f64 / n;
    let half = Z95 * (p * (1.0 - p) / n).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Aggregated result at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    /// `errors / bits`, NaN for a failed point.
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Errors after each IDD iteration.
    pub iteration_errors: Vec<u64>,
    pub wall_time_s: f64,
    /// Set when a trial failed; the point's counts are then discarded.
    pub failure: Option<String>,
}

impl SweepPoint {
    fn from_counts(snr_db: f64, c: TrialCounts, wall_time_s: f64) -> Self {
        let (ci_low, ci_high) = binomial_ci(c.errors, c.bits);
        Self {
            snr_db,
            bits: c.bits,
            errors: c.errors,
            ber: c.errors as f64 / c.bits as f64,
            ci_low,
            ci_high,
            iteration_errors: c.iteration_errors,
            wall_time_s,
            failure: None,
        }
    }

    fn failed(snr_db: f64, err: &Error, wall_time_s: f64) -> Self {
        Self {
            snr_db,
            bits: 0,
            errors: 0,
            ber: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            iteration_errors: Vec::new(),
            wall_time_s,
            failure: Some(err.to_string()),
        }
    }

    /// BER after IDD iteration `it` (0-based).
    pub fn iteration_ber(&self, it: usize) -> Option<f64> {
        self.iteration_errors.get(it).map(|&e| e as f64 / self.bits as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by SNR.
    pub points: Vec<SweepPoint>,
    pub detector: String,
    pub estimator: String,
    pub seed: u64,
    /// SHA-256 of the serialized scenario.
    pub scenario_hash: String,
    pub version: &'static str,
}

impl SweepResult {
    pub fn failed_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.failure.is_some())
    }

    /// Exact text of the CSV output.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_rows(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    fn write_rows<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record([
            "snr_db",
            "bits",
            "errors",
            "ber",
            "ci_low",
            "ci_high",
            "detector",
            "estimator",
            "seed",
        ])?;
        for p in &self.points {
            w.write_record([
                format!("{}", p.snr_db),
                p.bits.to_string(),
                p.errors.to_string(),
                format!("{:e}", p.ber),
                format!("{:e}", p.ci_low),
                format!("{:e}", p.ci_high),
                self.detector.clone(),
                self.estimator.clone(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn scenario_hash(spec: &ScenarioSpec) -> String {
    let digest = Sha256::digest(serialize_config(spec).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Name written to the `detector` column; IDD runs carry their iteration count.
fn detector_label(spec: &ScenarioSpec) -> String {
    if spec.coding && spec.detector == crate::harness::DetectorChoice::Mmse && !spec.estimator.trains_filters() {
        format!("idd-mmse-{}", spec.idd.iterations)
    } else if spec.coding {
        format!("coded-{}", spec.detector.name())
    } else {
        spec.detector.name().to_string()
    }
}

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Rayon's global pool.
    Parallel,
    /// A dedicated pool with this many workers.
    Workers(usize),
}

fn run_point(sim: &Simulation<'_>, snr_db: f64, parallel: bool) -> Result<TrialCounts> {
    let packets = sim.spec.packets;
    let results: Vec<Result<TrialCounts>> = if parallel {
        (0..packets).into_par_iter().map(|t| sim.run_trial(snr_db, t)).collect()
    } else {
        (0..packets).map(|t| sim.run_trial(snr_db, t)).collect()
    };
    // keyed by trial index: the first failing trial decides the reported error
    results
        .into_iter()
        .try_fold(TrialCounts::default(), |acc, r| r.map(|c| acc.merge(&c)))
}

/// Sweeps the scenario's SNR list with the default parallel execution.
pub fn run_sweep(spec: &ScenarioSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::Parallel)
}

/// Failed trials abort their SNR point, which is kept with NaN statistics and the
/// error text; the other points are unaffected.
pub fn run_sweep_with(spec: &ScenarioSpec, execution: Execution) -> Result<SweepResult> {
    let sim = Simulation::new(spec)?;
    let mut snrs = spec.snr_db.clone();
    snrs.sort_by(f64::total_cmp);
    let sweep = |parallel: bool| -> Vec<SweepPoint> {
        snrs.iter()
            .map(|&snr| {
                let start = Instant::now();
                let outcome = run_point(&sim, snr, parallel);
                let secs = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(c) => SweepPoint::from_counts(snr, c, secs),
                    Err(e) => SweepPoint::failed(snr, &e, secs),
                }
            })
            .collect()
    };
    let points = match execution {
        Execution::Serial => sweep(false),
        Execution::Parallel => sweep(true),
        Execution::Workers(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(|| sweep(true)),
    };
    Ok(SweepResult {
        points,
        detector: detector_label(spec),
        estimator: spec.estimator.name().to_string(),
        seed: spec.seed,
        scenario_hash: scenario_hash(spec),
        version: env!("CARGO_PKG_VERSION"),
    })
}

/// Writes the CSV with columns `snr_db, bits, errors, ber, ci_low, ci_high,
/// detector, estimator, seed`.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    result.write_rows(&mut w)
}
