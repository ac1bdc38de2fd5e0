use crate::error::{Error, Result};
use crate::estimation::{check_delta, check_lambda};
use crate::linalg::{self, CMat, CVec, C64};

/// Exponentially weighted correlations `sum_l lambda^(N-1-l) x_l y_l^H`.
pub(crate) fn weighted_outer(x: &CMat, y: &CMat, lambda: f64) -> CMat {
    let n = x.ncols();
    let mut acc = CMat::zeros(x.nrows(), y.nrows());
    for l in 0..n {
        let w = C64::new(lambda.powi((n - 1 - l) as i32), 0.0);
        acc.gerc(w, &x.column(l), &y.column(l), C64::new(1.0, 0.0));
    }
    acc
}

fn check_history(pilots: &CMat, received: &CMat) -> Result<()> {
    if pilots.ncols() != received.ncols() {
        return Err(Error::dims("pilot history length", pilots.ncols(), received.ncols()));
    }
    Ok(())
}

fn solve_channel(q: &CMat, mut r: CMat, extra: f64, samples: usize) -> Result<CMat> {
    let n = r.nrows();
    for i in 0..n {
        r[(i, i)] += C64::new(extra, 0.0);
    }
    let gh = linalg::solve_hpd(&r, &q.adjoint()).ok_or(Error::RankDeficient { samples, needed: n })?;
    Ok(gh.adjoint())
}

/// Batch estimate `G = Q R^-1` with `Q = sum lambda^(N-1-l) r_l s_l^H` and
/// `R = sum lambda^(N-1-l) s_l s_l^H`. Pilots and received vectors are columns.
pub fn ls_channel_estimate(pilots: &CMat, received: &CMat, lambda: f64) -> Result<CMat> {
    check_lambda(lambda)?;
    check_history(pilots, received)?;
    let q = weighted_outer(received, pilots, lambda);
    let r = weighted_outer(pilots, pilots, lambda);
    solve_channel(&q, r, 0.0, pilots.ncols())
}

/// As [`ls_channel_estimate`] with `delta lambda^N I` added to `R`; this is what
/// [`ChannelRls`] computes exactly.
pub fn regularized_ls_channel_estimate(pilots: &CMat, received: &CMat, lambda: f64, delta: f64) -> Result<CMat> {
    check_lambda(lambda)?;
    check_delta(delta)?;
    check_history(pilots, received)?;
    let q = weighted_outer(received, pilots, lambda);
    let r = weighted_outer(pilots, pilots, lambda);
    solve_channel(&q, r, delta * lambda.powi(pilots.ncols() as i32), pilots.ncols())
}

/// Recursive least-squares channel estimator.
#[derive(Debug, Clone)]
pub struct ChannelRls {
    pub lambda: f64,
    /// Inverse of the (regularized) pilot correlation.
    pub p: CMat,
    /// Cross-correlation of received data and pilots.
    pub t: CMat,
    pub g_hat: CMat,
    pub samples: usize,
}

impl ChannelRls {
    pub fn new(n_rx: usize, streams: usize, lambda: f64, delta: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_delta(delta)?;
        Ok(Self {
            lambda,
            p: linalg::identity(streams) / C64::new(delta, 0.0),
            t: CMat::zeros(n_rx, streams),
            g_hat: CMat::zeros(n_rx, streams),
            samples: 0,
        })
    }

    pub fn update(&mut self, s: &CVec, r: &CVec) -> Result<()> {
        if s.len() != self.p.nrows() || r.len() != self.t.nrows() {
            return Err(Error::dims(
                "ChannelRls update",
                format!("{}/{}", self.p.nrows(), self.t.nrows()),
                format!("{}/{}", s.len(), r.len()),
            ));
        }
        let inv = 1.0 / self.lambda;
        let ps = &self.p * s;
        let denom = 1.0 + inv * s.dotc(&ps).re;
        let scale = C64::new(inv * inv / denom, 0.0);
        let mut p = &self.p * C64::new(inv, 0.0);
        p.gerc(-scale, &ps, &ps, C64::new(1.0, 0.0));
        // keep P Hermitian under rounding
        self.p = (&p + p.adjoint()) * C64::new(0.5, 0.0);
        self.t *= C64::new(self.lambda, 0.0);
        self.t.gerc(C64::new(1.0, 0.0), r, s, C64::new(1.0, 0.0));
        self.g_hat = &self.t * &self.p;
        self.samples += 1;
        Ok(())
    }

    pub fn estimate(&self) -> &CMat {
        &self.g_hat
    }
}

pub fn rls_channel_update(state: &mut ChannelRls, s: &CVec, r: &CVec) -> Result<()> {
    state.update(s, r)
}

/// Least-mean-squares channel estimator, `G += mu (r - G s) s^H`.
#[derive(Debug, Clone)]
pub struct ChannelLms {
    pub mu: f64,
    pub g_hat: CMat,
    pub samples: usize,
}

impl ChannelLms {
    pub fn new(n_rx: usize, streams: usize, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain("mu", "step size must be positive"));
        }
        Ok(Self {
            mu,
            g_hat: CMat::zeros(n_rx, streams),
            samples: 0,
        })
    }

    /// Returns the a-priori error `r - G s`.
    pub fn update(&mut self, s: &CVec, r: &CVec) -> Result<CVec> {
        if s.len() != self.g_hat.ncols() || r.len() != self.g_hat.nrows() {
            return Err(Error::dims("ChannelLms update", self.g_hat.ncols(), s.len()));
        }
        let e = r - &self.g_hat * s;
        self.g_hat.gerc(C64::new(self.mu, 0.0), &e, s, C64::new(1.0, 0.0));
        self.samples += 1;
        Ok(e)
    }

    pub fn estimate(&self) -> &CMat {
        &self.g_hat
    }
}

pub fn lms_channel_update(state: &mut ChannelLms, s: &CVec, r: &CVec) -> Result<CVec> {
    state.update(s, r)
}
