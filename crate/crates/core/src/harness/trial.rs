use itertools::Itertools;

use crate::detectors::{
    compute_ordering, compute_receive_filter, Detector, DfDetector, DfMode, FilterDesign, LinearDetector,
    MbSicDetector, MlDetector, OrderingCriterion, OrderingPattern, SicDetector,
};
use crate::error::{Error, Result};
use crate::estimation::{
    build_projection, ls_channel_estimate, ChannelLms, ChannelRls, JioRls, KrylovRls, ProjectionMethod, WeightedStats,
    DEFAULT_DELTA,
};
use crate::harness::{DetectorChoice, EstimatorChoice, ScenarioSpec};
use crate::idd::{idd_receive, linear_soft_receive};
use crate::linalg::{CMat, CVec};
use crate::rng::{substream, Purpose, SimRng};
use crate::sysmodel::{draw_channel, mean_gamma_sq, noise_variance_for, KroneckerFactors};
use crate::txchain::{assemble_frame, transmit_block, Bit, FramePayload, Qpsk};

/// Bit accounting of one packet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrialCounts {
    pub bits: u64,
    pub errors: u64,
    /// Errors after each IDD iteration (a single entry for non-iterative receivers).
    pub iteration_errors: Vec<u64>,
}

impl TrialCounts {
    /// Componentwise sum; associative and commutative.
    pub fn merge(mut self, other: &TrialCounts) -> TrialCounts {
        self.bits += other.bits;
        self.errors += other.errors;
        if self.iteration_errors.len() < other.iteration_errors.len() {
            self.iteration_errors.resize(other.iteration_errors.len(), 0);
        }
        for (a, b) in self.iteration_errors.iter_mut().zip(&other.iteration_errors) {
            *a += b;
        }
        self
    }
}

/// Parameters the receiver works with after the pilot phase.
enum Knowledge {
    Channel(CMat),
    Filters(CMat),
}

/// A scenario with its per-sweep precomputations (correlation roots and the
/// SNR normalization).
pub struct Simulation<'a> {
    pub spec: &'a ScenarioSpec,
    factors: KroneckerFactors,
    mean_gamma_sq: f64,
}

fn trial_rng(seed: u64, trial: usize, purpose: Purpose) -> SimRng {
    substream(seed, &[trial as u64, purpose as u64])
}

fn count_errors(estimate: &[Vec<Bit>], truth: &[Vec<Bit>]) -> u64 {
    estimate
        .iter()
        .flatten()
        .zip(truth.iter().flatten())
        .filter(|(a, b)| a != b)
        .count() as u64
}

impl<'a> Simulation<'a> {
    pub fn new(spec: &'a ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            factors: KroneckerFactors::for_config(&spec.system)?,
            mean_gamma_sq: mean_gamma_sq(&spec.system)?,
        })
    }

    /// `E[|gamma|^2]` entering the SNR definition.
    pub fn mean_gamma_sq(&self) -> f64 {
        self.mean_gamma_sq
    }

    /// Noise variance for an SNR per receive antenna in dB.
    pub fn noise_variance(&self, snr_db: f64) -> Result<f64> {
        let sys = &self.spec.system;
        noise_variance_for(
            snr_db,
            self.spec.snr_streams.unwrap_or(sys.n_streams()),
            sys.symbol_power * self.mean_gamma_sq,
            self.spec.code_rate(),
            Qpsk::BITS_PER_SYMBOL,
        )
    }

    /// One packet. Channel, payload, frame and noise draws depend only on the master
    /// seed and `trial`, so every SNR point and every detector sees the same
    /// realizations with the noise rescaled.
    pub fn run_trial(&self, snr_db: f64, trial: usize) -> Result<TrialCounts> {
        self.noise_variance(snr_db)
            .and_then(|noise| self.trial_inner(noise, trial))
            .map_err(|source| Error::Trial {
                trial,
                snr_db,
                source: Box::new(source),
            })
    }

    /// Same packet as [`Simulation::run_trial`] with an explicit noise variance
    /// (zero gives a noiseless link).
    pub fn run_trial_with_noise(&self, noise_var: f64, trial: usize) -> Result<TrialCounts> {
        self.trial_inner(noise_var, trial)
    }

    fn trial_inner(&self, noise: f64, trial: usize) -> Result<TrialCounts> {
        let spec = self.spec;
        let sys = &spec.system;
        let seed = spec.seed;
        let streams = sys.n_streams();
        let chan = draw_channel(sys, &self.factors, &mut trial_rng(seed, trial, Purpose::LargeScale))?;
        let g = chan.stacked;
        let info_len = spec.info_bits_per_stream();
        let payload = FramePayload::random(streams, info_len, &mut trial_rng(seed, trial, Purpose::Payload));
        let coding = spec.coding.then_some(&spec.idd.trellis);
        let frame = assemble_frame(
            sys,
            &payload,
            spec.pilot_len,
            coding,
            &mut trial_rng(seed, trial, Purpose::Frame),
        )?;
        let received = transmit_block(&g, &frame.symbols(), noise, &mut trial_rng(seed, trial, Purpose::Noise))?;
        let rp = received.columns(0, spec.pilot_len).into_owned();
        let rd = received.columns(spec.pilot_len, frame.data_len()).into_owned();

        let knowledge = self.estimate(&g, &frame.pilots, &rp)?;
        let sp = sys.symbol_power;
        let modulation = frame.modulation;
        let decided: Vec<Vec<Vec<Bit>>> = if spec.coding {
            let out = match (&knowledge, spec.detector) {
                (Knowledge::Channel(gh), DetectorChoice::Mmse) => {
                    idd_receive(&rd, gh, noise, sp, &frame.permutations, &spec.idd)?
                }
                (Knowledge::Channel(gh), d) => {
                    let design = if d == DetectorChoice::Rmf {
                        FilterDesign::Rmf
                    } else {
                        FilterDesign::Zf
                    };
                    let w = compute_receive_filter(gh, sp, noise, design)?.w;
                    linear_soft_receive(&rd, &w, sp, &frame.permutations, &spec.idd)?
                }
                (Knowledge::Filters(w), _) => linear_soft_receive(&rd, w, sp, &frame.permutations, &spec.idd)?,
            };
            out.info_bits
        } else {
            let detector: Box<dyn Detector> = match &knowledge {
                Knowledge::Channel(gh) => self.build_detector(gh, noise, modulation)?,
                Knowledge::Filters(w) => Box::new(LinearDetector::from_filters(w, modulation)),
            };
            let est = detector.detect_block(&rd);
            let bits = (0..streams)
                .map(|j| {
                    est.row(j)
                        .iter()
                        .flat_map(|&z| {
                            let (b0, b1) = modulation.slice(z);
                            [b0, b1]
                        })
                        .collect()
                })
                .collect();
            vec![bits]
        };
        let iteration_errors: Vec<u64> = decided.iter().map(|d| count_errors(d, &frame.info_bits)).collect();
        Ok(TrialCounts {
            bits: (streams * info_len) as u64,
            errors: *iteration_errors.last().unwrap_or(&0),
            iteration_errors,
        })
    }

    fn estimate(&self, g: &CMat, pilots: &CMat, rp: &CMat) -> Result<Knowledge> {
        let spec = self.spec;
        let n_a = g.nrows();
        let streams = g.ncols();
        let pairs = || {
            pilots
                .column_iter()
                .zip(rp.column_iter())
                .map(|(s, r)| (s.into_owned(), r.into_owned()))
        };
        Ok(match spec.estimator {
            EstimatorChoice::Perfect => Knowledge::Channel(g.clone()),
            EstimatorChoice::Ls => Knowledge::Channel(ls_channel_estimate(pilots, rp, 1.0)?),
            EstimatorChoice::Rls => {
                let mut est = ChannelRls::new(n_a, streams, spec.lambda, DEFAULT_DELTA)?;
                for (s, r) in pairs() {
                    est.update(&s, &r)?;
                }
                Knowledge::Channel(est.g_hat)
            }
            EstimatorChoice::Lms => {
                let mut est = ChannelLms::new(n_a, streams, spec.mu)?;
                for (s, r) in pairs() {
                    est.update(&s, &r)?;
                }
                Knowledge::Channel(est.g_hat)
            }
            EstimatorChoice::RrPc => {
                let mut stats = WeightedStats::new(n_a, streams, spec.lambda, DEFAULT_DELTA)?;
                for (s, r) in pairs() {
                    stats.update(&r, &s)?;
                }
                let mut w = CMat::zeros(n_a, streams);
                for k in 0..streams {
                    let p: CVec = stats.p_hat.column(k).into_owned();
                    let proj = build_projection(ProjectionMethod::Pc, &stats.r_hat, &p, spec.rank)?;
                    w.set_column(k, &(&proj.t * stats.reduced_solution(&proj.t, k)?));
                }
                Knowledge::Filters(w)
            }
            EstimatorChoice::RrKrylov => {
                let mut est = KrylovRls::new(n_a, streams, spec.rank, spec.lambda, DEFAULT_DELTA)?;
                for (s, r) in pairs() {
                    est.update(&r, &s)?;
                }
                Knowledge::Filters(est.filters()?)
            }
            EstimatorChoice::RrJio => {
                let mut est = JioRls::new(n_a, streams, spec.rank, spec.lambda, DEFAULT_DELTA)?;
                for (s, r) in pairs() {
                    est.update(&r, &s)?;
                }
                Knowledge::Filters(est.filters())
            }
        })
    }

    fn build_detector(&self, g: &CMat, noise: f64, modulation: Qpsk) -> Result<Box<dyn Detector>> {
        let spec = self.spec;
        let sp = spec.system.symbol_power;
        let mmse = FilterDesign::Mmse;
        let ordering = || -> Result<OrderingPattern> { compute_ordering(g, sp, noise, spec.ordering, None) };
        Ok(match spec.detector {
            DetectorChoice::Rmf | DetectorChoice::Zf | DetectorChoice::Mmse => {
                let design = match spec.detector {
                    DetectorChoice::Rmf => FilterDesign::Rmf,
                    DetectorChoice::Zf => FilterDesign::Zf,
                    _ => mmse,
                };
                Box::new(LinearDetector::new(
                    &compute_receive_filter(g, sp, noise, design)?,
                    modulation,
                ))
            }
            DetectorChoice::Sic if spec.ordering == OrderingCriterion::Exhaustive => {
                // per-vector best ordering == best branch over every permutation
                let all: Vec<OrderingPattern> = (0..g.ncols())
                    .permutations(g.ncols())
                    .map(|o| OrderingPattern::from_order(o, OrderingCriterion::Exhaustive))
                    .collect::<Result<_>>()?;
                Box::new(MbSicDetector::with_orderings(g, sp, noise, &all, mmse, modulation)?)
            }
            DetectorChoice::Sic => Box::new(SicDetector::new(g, sp, noise, &ordering()?, mmse, modulation)?),
            DetectorChoice::MbSic => Box::new(MbSicDetector::new(
                g,
                sp,
                noise,
                &ordering()?,
                spec.branches,
                mmse,
                modulation,
            )?),
            DetectorChoice::DfS => Box::new(DfDetector::new(g, sp, noise, DfMode::Successive, mmse, modulation)?),
            DetectorChoice::DfP => Box::new(DfDetector::new(g, sp, noise, DfMode::Parallel, mmse, modulation)?),
            DetectorChoice::Ml => Box::new(MlDetector::new(g, &modulation.points())?),
        })
    }
}

/// Runs one packet of `spec` at `snr_db`.
pub fn run_trial(spec: &ScenarioSpec, snr_db: f64, trial: usize) -> Result<TrialCounts> {
    Simulation::new(spec)?.run_trial(snr_db, trial)
}
