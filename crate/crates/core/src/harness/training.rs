//! BER of pilot-trained receive filters against the number of training symbols.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    build_projection, FilterLms, FilterRls, JioRls, KrylovRls, ProjectionMethod, WeightedStats, DEFAULT_DELTA,
};
use crate::linalg::{CMat, CVec};
use crate::rng::{substream, Purpose};
use crate::sysmodel::{draw_channel, mean_gamma_sq, noise_variance_for, KroneckerFactors, SystemConfig};
use crate::txchain::{transmit_block, Qpsk};

/// Adaptive algorithm producing the receive filters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterTrainer {
    /// Full-rank RLS.
    Rls,
    Lms {
        mu: f64,
    },
    /// Krylov reduced-rank least squares of rank `D`.
    Krylov {
        rank: usize,
    },
    /// Joint iterative optimization of projection and reduced filter.
    Jio {
        rank: usize,
    },
    /// Principal-components projection of rank `D`.
    Pc {
        rank: usize,
    },
}

impl FilterTrainer {
    pub fn name(&self) -> String {
        match self {
            FilterTrainer::Rls => "rls".into(),
            FilterTrainer::Lms { .. } => "lms".into(),
            FilterTrainer::Krylov { rank } => format!("krylov-rls-d{rank}"),
            FilterTrainer::Jio { rank } => format!("jio-rls-d{rank}"),
            FilterTrainer::Pc { rank } => format!("pc-rls-d{rank}"),
        }
    }
}

enum State {
    Rls(FilterRls),
    Lms(FilterLms),
    Krylov(KrylovRls),
    Jio(JioRls),
    Pc(WeightedStats, usize),
}

impl State {
    fn new(trainer: FilterTrainer, dim: usize, streams: usize, lambda: f64) -> Result<Self> {
        Ok(match trainer {
            FilterTrainer::Rls => State::Rls(FilterRls::new(dim, streams, lambda, DEFAULT_DELTA)?),
            FilterTrainer::Lms { mu } => State::Lms(FilterLms::new(dim, streams, mu)?),
            FilterTrainer::Krylov { rank } => State::Krylov(KrylovRls::new(dim, streams, rank, lambda, DEFAULT_DELTA)?),
            FilterTrainer::Jio { rank } => State::Jio(JioRls::new(dim, streams, rank, lambda, DEFAULT_DELTA)?),
            FilterTrainer::Pc { rank } => {
                if rank == 0 || rank > dim {
                    return Err(Error::domain("rank", format!("must be in 1..={dim}")));
                }
                State::Pc(WeightedStats::new(dim, streams, lambda, DEFAULT_DELTA)?, rank)
            }
        })
    }

    fn update(&mut self, r: &CVec, s: &CVec) -> Result<()> {
        match self {
            State::Rls(x) => x.update(r, s).map(drop),
            State::Lms(x) => x.update(r, s).map(drop),
            State::Krylov(x) => x.update(r, s),
            State::Jio(x) => x.update(r, s).map(drop),
            State::Pc(x, _) => x.update(r, s),
        }
    }

    fn filters(&self) -> Result<CMat> {
        match self {
            State::Rls(x) => Ok(x.w.clone()),
            State::Lms(x) => Ok(x.w.clone()),
            State::Krylov(x) => x.filters(),
            State::Jio(x) => Ok(x.filters()),
            State::Pc(stats, rank) => {
                let mut w = CMat::zeros(stats.r_hat.nrows(), stats.p_hat.ncols());
                for k in 0..stats.p_hat.ncols() {
                    let p: CVec = stats.p_hat.column(k).into_owned();
                    let proj = build_projection(ProjectionMethod::Pc, &stats.r_hat, &p, *rank)?;
                    w.set_column(k, &(&proj.t * stats.reduced_solution(&proj.t, k)?));
                }
                Ok(w)
            }
        }
    }
}

/// Training experiment: per trial a fresh channel, a pilot sequence and a
/// held-out test block; BER of the test block is measured at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSpec {
    pub system: SystemConfig,
    pub snr_db: f64,
    pub lambda: f64,
    /// Training lengths at which the filters are evaluated, increasing.
    pub checkpoints: Vec<usize>,
    pub test_len: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCurve {
    pub trainer: String,
    pub checkpoints: Vec<usize>,
    /// Test bits per checkpoint.
    pub bits: u64,
    pub errors: Vec<u64>,
}

impl TrainingCurve {
    pub fn ber(&self) -> Vec<f64> {
        self.errors.iter().map(|&e| e as f64 / self.bits as f64).collect()
    }

    /// First checkpoint whose BER is at most `threshold`.
    pub fn symbols_to_reach(&self, threshold: f64) -> Option<usize> {
        self.ber()
            .iter()
            .zip(&self.checkpoints)
            .find(|(b, _)| **b <= threshold)
            .map(|(_, &n)| n)
    }

    /// Two-column `symbols ber` text for plotting.
    pub fn to_plot_data(&self) -> String {
        self.checkpoints
            .iter()
            .zip(self.ber())
            .map(|(n, b)| format!("{n} {b:e}\n"))
            .collect()
    }
}

fn random_symbols<R: Rng>(rows: usize, cols: usize, q: &Qpsk, rng: &mut R) -> CMat {
    let pts = q.points();
    CMat::from_fn(rows, cols, |_, _| pts[rng.random_range(0..4)])
}

fn count_bit_errors(est: &CMat, truth: &CMat, q: &Qpsk) -> u64 {
    est.iter()
        .zip(truth.iter())
        .map(|(&a, &b)| {
            let (a0, a1) = q.slice(a);
            let (b0, b1) = q.slice(b);
            u64::from(a0 != b0) + u64::from(a1 != b1)
        })
        .sum()
}

/// Runs the experiment for one trainer. Channels, symbols and noise depend only on
/// the seed and trial index, so curves of different trainers share realizations.
pub fn training_curve(spec: &TrainingSpec, trainer: FilterTrainer) -> Result<TrainingCurve> {
    if spec.trials == 0 || spec.test_len == 0 {
        return Err(Error::domain("trials", "need at least one trial and test symbol"));
    }
    if spec.checkpoints.is_empty() || spec.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain(
            "checkpoints",
            "must be non-empty and strictly increasing",
        ));
    }
    let sys = &spec.system;
    let factors = KroneckerFactors::for_config(sys)?;
    let streams = sys.n_streams();
    let noise = noise_variance_for(
        spec.snr_db,
        streams,
        sys.symbol_power * mean_gamma_sq(sys)?,
        1.0,
        Qpsk::BITS_PER_SYMBOL,
    )?;
    let q = Qpsk::new(sys.symbol_power);
    let train_len = *spec.checkpoints.last().unwrap_or(&0);

    let per_trial: Vec<Result<Vec<u64>>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<u64>> {
            let key = |p: Purpose| substream(spec.seed, &[trial as u64, p as u64]);
            let g = draw_channel(sys, &factors, &mut key(Purpose::LargeScale))?.stacked;
            let mut sym_rng = key(Purpose::Frame);
            let train = random_symbols(streams, train_len, &q, &mut sym_rng);
            let test = random_symbols(streams, spec.test_len, &q, &mut key(Purpose::TestData));
            let r_train = transmit_block(&g, &train, noise, &mut key(Purpose::Noise))?;
            let r_test = transmit_block(
                &g,
                &test,
                noise,
                &mut substream(spec.seed, &[trial as u64, Purpose::Noise as u64, 1]),
            )?;
            let mut state = State::new(trainer, g.nrows(), streams, spec.lambda)?;
            let mut errors = Vec::with_capacity(spec.checkpoints.len());
            let mut done = 0;
            for &cp in &spec.checkpoints {
                for i in done..cp {
                    state.update(&r_train.column(i).into_owned(), &train.column(i).into_owned())?;
                }
                done = cp;
                let est = state.filters()?.adjoint() * &r_test;
                errors.push(count_bit_errors(&est, &test, &q));
            }
            Ok(errors)
        })
        .collect();
    let mut errors = vec![0u64; spec.checkpoints.len()];
    for r in per_trial {
        for (a, b) in errors.iter_mut().zip(r?) {
            *a += b;
        }
    }
    Ok(TrainingCurve {
        trainer: trainer.name(),
        checkpoints: spec.checkpoints.clone(),
        bits: (spec.trials * spec.test_len * streams * Qpsk::BITS_PER_SYMBOL) as u64,
        errors,
    })
}
