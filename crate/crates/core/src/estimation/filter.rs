use crate::error::{Error, Result};
use crate::estimation::channel::weighted_outer;
use crate::estimation::{check_delta, check_lambda};
use crate::linalg::{self, CMat, CVec, C64};

fn solve_filter(received: &CMat, desired: &CMat, lambda: f64, extra: f64) -> Result<CMat> {
    if received.ncols() != desired.ncols() {
        return Err(Error::dims(
            "training history length",
            received.ncols(),
            desired.ncols(),
        ));
    }
    let mut r = weighted_outer(received, received, lambda);
    let p = weighted_outer(received, desired, lambda);
    for i in 0..r.nrows() {
        r[(i, i)] += C64::new(extra, 0.0);
    }
    linalg::solve_hpd(&r, &p).ok_or(Error::RankDeficient {
        samples: received.ncols(),
        needed: received.nrows(),
    })
}

/// Batch filters `w_k = R_r^-1 p_k`, one column per row of `desired`.
pub fn ls_filter_estimate(received: &CMat, desired: &CMat, lambda: f64) -> Result<CMat> {
    check_lambda(lambda)?;
    solve_filter(received, desired, lambda, 0.0)
}

/// As [`ls_filter_estimate`] with `delta lambda^N I` added to `R_r`, which
/// [`FilterRls`] reproduces exactly.
pub fn regularized_ls_filter_estimate(received: &CMat, desired: &CMat, lambda: f64, delta: f64) -> Result<CMat> {
    check_lambda(lambda)?;
    check_delta(delta)?;
    solve_filter(received, desired, lambda, delta * lambda.powi(received.ncols() as i32))
}

/// Recursive least-squares receive filters. All tracked streams share the
/// inverse correlation `P`; column `k` of `w` is the filter of stream `k`.
#[derive(Debug, Clone)]
pub struct FilterRls {
    pub lambda: f64,
    pub p: CMat,
    pub w: CMat,
    pub samples: usize,
}

impl FilterRls {
    pub fn new(dim: usize, streams: usize, lambda: f64, delta: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_delta(delta)?;
        Ok(Self {
            lambda,
            p: linalg::identity(dim) / C64::new(delta, 0.0),
            w: CMat::zeros(dim, streams),
            samples: 0,
        })
    }

    /// One update with received vector `r` and desired symbols `s`; returns the
    /// a-priori errors `s - W^H r`.
    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<CVec> {
        if r.len() != self.w.nrows() || s.len() != self.w.ncols() {
            return Err(Error::dims("FilterRls update", self.w.nrows(), r.len()));
        }
        let inv = 1.0 / self.lambda;
        let pr = &self.p * r;
        let denom = 1.0 + inv * r.dotc(&pr).re;
        let k = &pr * C64::new(inv / denom, 0.0);
        let mut p = &self.p * C64::new(inv, 0.0);
        // P r is the conjugate transpose of r^H P since P is Hermitian
        p.gerc(C64::new(-inv, 0.0), &k, &pr, C64::new(1.0, 0.0));
        self.p = (&p + p.adjoint()) * C64::new(0.5, 0.0);
        let e = s - self.w.adjoint() * r;
        self.w.gerc(C64::new(1.0, 0.0), &k, &e, C64::new(1.0, 0.0));
        self.samples += 1;
        Ok(e)
    }

    pub fn output(&self, r: &CVec) -> CVec {
        self.w.adjoint() * r
    }
}

pub fn rls_filter_update(state: &mut FilterRls, r: &CVec, s: &CVec) -> Result<CVec> {
    state.update(r, s)
}

/// Least-mean-squares receive filters, `w += mu e* r`.
#[derive(Debug, Clone)]
pub struct FilterLms {
    pub mu: f64,
    pub w: CMat,
    pub samples: usize,
}

impl FilterLms {
    pub fn new(dim: usize, streams: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain("mu", "step size must be positive"));
        }
        Ok(Self {
            mu,
            w: CMat::zeros(dim, streams),
            samples: 0,
        })
    }

    pub fn update(&mut self, r: &CVec, s: &CVec) -> Result<CVec> {
        if r.len() != self.w.nrows() || s.len() != self.w.ncols() {
            return Err(Error::dims("FilterLms update", self.w.nrows(), r.len()));
        }
        let e = s - self.w.adjoint() * r;
        self.w.gerc(C64::new(self.mu, 0.0), r, &e, C64::new(1.0, 0.0));
        self.samples += 1;
        Ok(e)
    }

    pub fn output(&self, r: &CVec) -> CVec {
        self.w.adjoint() * r
    }
}

pub fn lms_filter_update(state: &mut FilterLms, r: &CVec, s: &CVec) -> Result<CVec> {
    state.update(r, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, complex_gaussian_matrix};
    use crate::rng::substream;
    use crate::txchain::{transmit_block, Qpsk};
    use rand::Rng;

    fn qpsk_block(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
        let pts = Qpsk::default().points();
        CMat::from_fn(rows, cols, |_, _| pts[rng.random_range(0..4)])
    }

    #[test]
    fn rls_matches_regularized_batch() {
        let mut rng = substream(1, &[]);
        let g = complex_gaussian_matrix(6, 3, &mut rng);
        let s = qpsk_block(3, 200, &mut rng);
        let r = transmit_block(&g, &s, 0.2, &mut rng).unwrap();
        for lambda in [1.0, 0.995] {
            let mut rls = FilterRls::new(6, 3, lambda, 0.01).unwrap();
            for l in 0..200 {
                rls.update(&r.column(l).into_owned(), &s.column(l).into_owned())
                    .unwrap();
            }
            let batch = regularized_ls_filter_estimate(&r, &s, lambda, 0.01).unwrap();
            assert!((&rls.w - batch).norm() < 1e-9);
        }
    }

    #[test]
    fn first_error_is_symbol() {
        let mut rls = FilterRls::new(2, 1, 1.0, 0.01).unwrap();
        let s = CVec::from_element(1, c(0.7, -0.7));
        let e = rls.update(&CVec::from_element(2, c(1.0, 0.0)), &s).unwrap();
        assert_eq!(e, s);
    }

    #[test]
    fn rank_one_data_gives_matched_direction() {
        let mut rng = substream(2, &[]);
        let g = CVec::from_fn(4, |_, _| linalg::complex_gaussian(&mut rng));
        let s = qpsk_block(1, 50, &mut rng);
        let r = &g * &s;
        // noiseless rank-one data: the regularized LS filter lies along g
        let w = regularized_ls_filter_estimate(&r, &s, 1.0, 1e-6).unwrap();
        let col = w.column(0).into_owned();
        let cos = col.dotc(&g).norm() / (col.norm() * g.norm());
        assert!((cos - 1.0).abs() < 1e-10);
        let out = col.dotc(&r.column(7).into_owned());
        assert!((out - s[(0, 7)]).norm() < 1e-5);
    }

    #[test]
    fn white_data_filter_vanishes() {
        let mut rng = substream(3, &[]);
        let mut last = f64::INFINITY;
        for n in [100, 1000, 10_000] {
            let r = complex_gaussian_matrix(4, n, &mut rng);
            let s = qpsk_block(1, n, &mut rng);
            let w = ls_filter_estimate(&r, &s, 1.0).unwrap();
            assert!(w.norm() < last);
            last = w.norm();
        }
        assert!(last < 0.05);
    }

    #[test]
    fn lms_unchanged_on_zero_error() {
        let mut lms = FilterLms::new(2, 1, 0.05).unwrap();
        lms.w[(0, 0)] = c(1.0, 0.0);
        let r = CVec::from_vec(vec![c(0.3, 0.1), c(0.0, 0.0)]);
        let s = CVec::from_element(1, c(0.3, 0.1));
        let e = lms.update(&r, &s).unwrap();
        assert_eq!(e[0], c(0.0, 0.0));
        assert_eq!(lms.w[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn lms_identity_channel_error_trend() {
        let mut rng = substream(4, &[]);
        let mut lms = FilterLms::new(1, 1, 0.05).unwrap();
        let s = qpsk_block(1, 500, &mut rng);
        let errs: Vec<f64> = (0..500)
            .map(|l| {
                let sv = CVec::from_element(1, s[(0, l)]);
                lms.update(&sv, &sv).unwrap()[0].norm()
            })
            .collect();
        let head: f64 = errs[..50].iter().sum();
        let tail: f64 = errs[450..].iter().sum();
        assert!(tail < 0.01 * head);
    }

    #[test]
    fn rls_approaches_wiener_and_beats_lms() {
        let seeds = 100;
        let (mut rls_mse, mut lms_mse, mut wiener_mse) = (0.0, 0.0, 0.0);
        for seed in 0..seeds {
            let mut rng = substream(5, &[seed]);
            let n_a = 8;
            let g = complex_gaussian_matrix(n_a, 2, &mut rng) * C64::new(0.5, 0.0);
            let noise = 0.1;
            // least squares from n samples carries an excess MSE of about
            // N_A / (n - N_A - 1) times the Wiener MSE, about 11% at n = 10 N_A
            let train = 12 * n_a;
            let s = qpsk_block(2, train, &mut rng);
            let r = transmit_block(&g, &s, noise, &mut rng).unwrap();
            let mut rls = FilterRls::new(n_a, 1, 0.999, 0.01).unwrap();
            let mut lms = FilterLms::new(n_a, 1, 0.05).unwrap();
            for l in 0..train {
                let rv = r.column(l).into_owned();
                let sv = CVec::from_element(1, s[(0, l)]);
                rls.update(&rv, &sv).unwrap();
                lms.update(&rv, &sv).unwrap();
            }
            // analytic output MSE: 1 - 2 Re(w^H g_0) + w^H R w with R = G G^H + noise I
            let rcov = &g * g.adjoint() + linalg::identity(n_a) * C64::new(noise, 0.0);
            let mse = |w: &CVec| 1.0 - 2.0 * w.dotc(&g.column(0).into_owned()).re + w.dotc(&(&rcov * w)).re;
            let wiener = linalg::solve_hpd(&rcov, &g.columns(0, 1).into_owned()).unwrap();
            wiener_mse += mse(&wiener.column(0).into_owned());
            rls_mse += mse(&rls.w.column(0).into_owned());
            lms_mse += mse(&lms.w.column(0).into_owned());
        }
        assert!(rls_mse <= 1.1 * wiener_mse, "{rls_mse} vs {wiener_mse}");
        assert!(lms_mse >= rls_mse);
    }
}
