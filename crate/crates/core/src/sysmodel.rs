//! Uplink channel synthesis for centralized (CAS) and distributed (DAS) antenna
//! architectures.
//!
//! A realization combines Kronecker-correlated small-scale fading with per-link
//! large-scale gains `gamma = alpha * beta`, where `alpha = sqrt(L / d^tau)` is the
//! path loss and `beta = 10^(sigma v / 10)` the log-normal shadowing. In a DAS the
//! base station antennas and each remote radio head see their own large-scale gain,
//! which expands into an `N_A x N_A` diagonal per user.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Antenna architecture at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Cas,
    Das,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Cas => "cas",
            Architecture::Das => "das",
        }
    }
}

/// Closed interval `[lo, hi]`; a degenerate interval encodes a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn constant(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_constant(&self) -> bool {
        self.lo == self.hi
    }
}

/// Scenario geometry and propagation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Antennas at the base station, `N_B`.
    pub n_bs: usize,
    /// Remote radio heads, `L`. Zero means a centralized array.
    pub n_heads: usize,
    /// Antennas per remote radio head, `Q`.
    pub antennas_per_head: usize,
    /// Users, `K`.
    pub n_users: usize,
    /// Antennas per user, `N_U`.
    pub antennas_per_user: usize,
    /// Correlation index of neighbouring antennas, used on both link ends.
    pub rho: f64,
    /// Path loss exponent `tau`.
    pub path_loss_exp: f64,
    /// Shadowing spread in dB.
    pub shadow_spread_db: f64,
    /// Power path loss `L` of a link, drawn uniformly.
    pub path_gain_range: Range,
    /// Normalized user-to-antenna distance.
    pub distance_range: Range,
    /// Grid step of the discrete uniform distance draw; zero draws continuously.
    pub distance_step: f64,
    /// Per-user symbol power `sigma_s^2`.
    pub symbol_power: f64,
}

impl SystemConfig {
    /// Centralized array with the default propagation parameters
    /// (`L = 0.7`, `tau = 2`, `d` on `0.1..=0.95`, 3 dB shadowing, `rho = 0.2`).
    pub fn cas(n_rx: usize, n_users: usize, antennas_per_user: usize) -> Self {
        Self {
            n_bs: n_rx,
            n_heads: 0,
            antennas_per_head: 0,
            n_users,
            antennas_per_user,
            rho: 0.2,
            path_loss_exp: 2.0,
            shadow_spread_db: 3.0,
            path_gain_range: Range::constant(0.7),
            distance_range: Range::new(0.1, 0.95),
            distance_step: 0.05,
            symbol_power: 1.0,
        }
    }

    /// Distributed array with the default propagation parameters
    /// (`L` uniform on `[0.7, 1]`, `tau = 2`, `d` on `0.1..=0.5`, 3 dB shadowing, `rho = 0.2`).
    pub fn das(
        n_bs: usize,
        n_heads: usize,
        antennas_per_head: usize,
        n_users: usize,
        antennas_per_user: usize,
    ) -> Self {
        Self {
            n_bs,
            n_heads,
            antennas_per_head,
            n_users,
            antennas_per_user,
            rho: 0.2,
            path_loss_exp: 2.0,
            shadow_spread_db: 3.0,
            path_gain_range: Range::new(0.7, 1.0),
            distance_range: Range::new(0.1, 0.5),
            distance_step: 0.05,
            symbol_power: 1.0,
        }
    }

    /// Total receive antennas `N_A = N_B + L Q`.
    pub fn n_rx_total(&self) -> usize {
        self.n_bs + self.n_heads * self.antennas_per_head
    }

    /// Total transmitted streams `K N_U`.
    pub fn n_streams(&self) -> usize {
        self.n_users * self.antennas_per_user
    }

    pub fn architecture(&self) -> Architecture {
        if self.n_heads == 0 {
            Architecture::Cas
        } else {
            Architecture::Das
        }
    }

    /// Large-scale links per user: one for CAS, `L + 1` for DAS.
    pub fn links_per_user(&self) -> usize {
        self.n_heads + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.antennas_per_user == 0 {
            return Err(Error::domain("n_users", "need at least one user antenna"));
        }
        if self.n_rx_total() == 0 {
            return Err(Error::domain("n_rx_total", "need at least one receive antenna"));
        }
        if self.n_heads > 0 && self.antennas_per_head == 0 {
            return Err(Error::domain("antennas_per_head", "remote heads need Q >= 1"));
        }
        if self.n_rx_total() < self.n_streams() {
            return Err(Error::domain(
                "n_rx_total",
                format!(
                    "N_A = {} is smaller than K N_U = {}",
                    self.n_rx_total(),
                    self.n_streams()
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::domain("rho", format!("{} not in [0, 1]", self.rho)));
        }
        if !(2.0..=4.0).contains(&self.path_loss_exp) {
            return Err(Error::domain(
                "path_loss_exp",
                format!("{} not in [2, 4]", self.path_loss_exp),
            ));
        }
        if !(self.shadow_spread_db >= 0.0 && self.shadow_spread_db.is_finite()) {
            return Err(Error::domain("shadow_spread_db", "must be finite and >= 0"));
        }
        let d = self.distance_range;
        if !(d.lo > 0.0 && d.lo <= d.hi && d.hi <= 1.0) {
            return Err(Error::domain(
                "distance_range",
                format!("[{}, {}] not inside (0, 1]", d.lo, d.hi),
            ));
        }
        let l = self.path_gain_range;
        if !(l.lo > 0.0 && l.lo <= l.hi && l.hi.is_finite()) {
            return Err(Error::domain(
                "path_gain_range",
                format!("[{}, {}] must be positive and ordered", l.lo, l.hi),
            ));
        }
        if !(self.distance_step >= 0.0 && self.distance_step.is_finite()) {
            return Err(Error::domain("distance_step", "must be finite and >= 0"));
        }
        if !(self.symbol_power > 0.0 && self.symbol_power.is_finite()) {
            return Err(Error::domain("symbol_power", "must be positive"));
        }
        Ok(())
    }
}

/// Correlation matrix with entries `rho^((i-j)^2)`.
pub fn build_correlation_matrix(n: usize, rho: f64) -> Result<CMat> {
    if n == 0 {
        return Err(Error::domain("n", "correlation matrix needs n >= 1"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("rho", format!("{rho} not in [0, 1]")));
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        let k = (i as i64 - j as i64).unsigned_abs();
        C64::new(rho.powi((k * k) as i32), 0.0)
    }))
}

/// Hermitian square root, the `Theta^(1/2)` factor of the Kronecker model.
pub fn matrix_sqrt(theta: &CMat) -> Result<CMat> {
    linalg::hermitian_sqrt(theta)
}

/// Square-root correlation factors for the receive and transmit sides.
#[derive(Debug, Clone)]
pub struct KroneckerFactors {
    pub rx_sqrt: CMat,
    pub tx_sqrt: CMat,
}

impl KroneckerFactors {
    /// Same correlation index on an `n_rx`-element receive array and `n_tx` transmit antennas.
    pub fn uniform(n_rx: usize, n_tx: usize, rho: f64) -> Result<Self> {
        Ok(Self {
            rx_sqrt: matrix_sqrt(&build_correlation_matrix(n_rx, rho)?)?,
            tx_sqrt: matrix_sqrt(&build_correlation_matrix(n_tx, rho)?)?,
        })
    }

    /// Factors for a scenario. In a DAS only co-located antennas are correlated, so the
    /// receive factor is block diagonal: one `N_B` block and `L` blocks of size `Q`.
    pub fn for_config(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let n_a = cfg.n_rx_total();
        let mut rx_sqrt = CMat::zeros(n_a, n_a);
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(cfg.links_per_user());
        if cfg.n_bs > 0 {
            blocks.push(cfg.n_bs);
        }
        blocks.extend(std::iter::repeat_n(cfg.antennas_per_head, cfg.n_heads));
        for size in blocks {
            let root = matrix_sqrt(&build_correlation_matrix(size, cfg.rho)?)?;
            rx_sqrt.view_mut((offset, offset), (size, size)).copy_from(&root);
            offset += size;
        }
        let tx_sqrt = matrix_sqrt(&build_correlation_matrix(cfg.antennas_per_user, cfg.rho)?)?;
        Ok(Self { rx_sqrt, tx_sqrt })
    }

    pub fn n_rx(&self) -> usize {
        self.rx_sqrt.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.tx_sqrt.nrows()
    }
}

/// Draws one `H_k = Theta_R^(1/2) H_o Theta_T^(1/2)` with `H_o` i.i.d. CN(0, 1).
pub fn draw_small_scale<R: Rng + ?Sized>(factors: &KroneckerFactors, rng: &mut R) -> CMat {
    let white = linalg::complex_gaussian_matrix(factors.n_rx(), factors.n_tx(), rng);
    &factors.rx_sqrt * white * &factors.tx_sqrt
}

/// Large-scale gain of a single user-to-antenna-group link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub distance: f64,
    pub path_gain: f64,
    pub shadow_v: f64,
    /// Path loss `sqrt(L / d^tau)`.
    pub alpha: f64,
    /// Shadowing `10^(sigma v / 10)`.
    pub beta: f64,
    pub gamma: f64,
}

impl LinkGain {
    pub fn new(path_gain: f64, distance: f64, tau: f64, shadow_spread_db: f64, shadow_v: f64) -> Self {
        let alpha = (path_gain / distance.powf(tau)).sqrt();
        let beta = 10f64.powf(shadow_spread_db * shadow_v / 10.0);
        Self {
            distance,
            path_gain,
            shadow_v,
            alpha,
            beta,
            gamma: alpha * beta,
        }
    }
}

/// Large-scale gains for every user: one link (CAS) or `L + 1` links (DAS).
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleDraw {
    pub links: Vec<Vec<LinkGain>>,
}

impl LargeScaleDraw {
    /// Per-antenna gains of user `k`: `gamma_{k,1}` repeated `N_B` times, then each
    /// head's gain repeated `Q` times.
    pub fn antenna_gains(&self, cfg: &SystemConfig, user: usize) -> Vec<f64> {
        let links = &self.links[user];
        let mut out = Vec::with_capacity(cfg.n_rx_total());
        out.extend(std::iter::repeat_n(links[0].gamma, cfg.n_bs));
        for head in &links[1..] {
            out.extend(std::iter::repeat_n(head.gamma, cfg.antennas_per_head));
        }
        out
    }

    pub fn gammas(&self) -> impl Iterator<Item = f64> + '_ {
        self.links.iter().flatten().map(|l| l.gamma)
    }
}

fn draw_distance<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> f64 {
    let r = cfg.distance_range;
    if cfg.distance_step > 0.0 {
        let steps = ((r.hi - r.lo) / cfg.distance_step + 1e-9).floor() as usize;
        let idx = rng.random_range(0..=steps);
        (r.lo + idx as f64 * cfg.distance_step).min(r.hi)
    } else {
        rng.random_range(r.lo..=r.hi)
    }
}

/// Draws the large-scale gains. Per link the draw order is distance, path gain,
/// shadowing, so a DAS with `L = 0` consumes exactly the stream a CAS does.
pub fn draw_large_scale<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> LargeScaleDraw {
    let links = (0..cfg.n_users)
        .map(|_| {
            (0..cfg.links_per_user())
                .map(|_| {
                    let d = draw_distance(cfg, rng);
                    let l = rng.random_range(cfg.path_gain_range.lo..=cfg.path_gain_range.hi);
                    let v: f64 = rng.sample(StandardNormal);
                    LinkGain::new(l, d, cfg.path_loss_exp, cfg.shadow_spread_db, v)
                })
                .collect()
        })
        .collect();
    LargeScaleDraw { links }
}

/// Per-user small-scale matrices, large-scale gains and the resulting composite channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub small_scale: Vec<CMat>,
    pub large_scale: LargeScaleDraw,
    pub composite: Vec<CMat>,
    /// `G = [G_1 ... G_K]`, `N_A x K N_U`.
    pub stacked: CMat,
}

/// Applies the large-scale gains to the small-scale matrices and stacks the result.
pub fn compose_channel(cfg: &SystemConfig, small: Vec<CMat>, large: LargeScaleDraw) -> Result<ChannelRealization> {
    let n_a = cfg.n_rx_total();
    let n_u = cfg.antennas_per_user;
    if small.len() != cfg.n_users {
        return Err(Error::dims("compose_channel users", cfg.n_users, small.len()));
    }
    if large.links.len() != cfg.n_users {
        return Err(Error::dims(
            "compose_channel large-scale users",
            cfg.n_users,
            large.links.len(),
        ));
    }
    let mut composite = Vec::with_capacity(cfg.n_users);
    let mut stacked = CMat::zeros(n_a, cfg.n_streams());
    for (k, h) in small.iter().enumerate() {
        if h.nrows() != n_a || h.ncols() != n_u {
            return Err(Error::dims(
                "compose_channel H_k",
                format!("{n_a}x{n_u}"),
                format!("{}x{}", h.nrows(), h.ncols()),
            ));
        }
        if large.links[k].len() != cfg.links_per_user() {
            return Err(Error::dims(
                "compose_channel links",
                cfg.links_per_user(),
                large.links[k].len(),
            ));
        }
        let gains = large.antenna_gains(cfg, k);
        let g_k = CMat::from_fn(n_a, n_u, |i, j| h[(i, j)] * gains[i]);
        stacked.view_mut((0, k * n_u), (n_a, n_u)).copy_from(&g_k);
        composite.push(g_k);
    }
    Ok(ChannelRealization {
        small_scale: small,
        large_scale: large,
        composite,
        stacked,
    })
}

/// Draws a complete realization: large-scale first, then one small-scale matrix per
/// user, all from the given stream.
pub fn draw_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    factors: &KroneckerFactors,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let large = draw_large_scale(cfg, rng);
    let small = (0..cfg.n_users).map(|_| draw_small_scale(factors, rng)).collect();
    compose_channel(cfg, small, large)
}

/// Noise variance for a per-receive-antenna SNR:
/// `sigma_n^2 = streams * sigma_sr^2 / (R C 10^(snr/10))`.
pub fn noise_variance_for(
    snr_db: f64,
    streams: usize,
    received_symbol_power: f64,
    code_rate: f64,
    bits_per_symbol: usize,
) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::domain("snr_db", "must be finite"));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::domain("code_rate", format!("{code_rate} not in (0, 1]")));
    }
    if bits_per_symbol == 0 || streams == 0 {
        return Err(Error::domain("bits_per_symbol", "must be >= 1"));
    }
    if !(received_symbol_power > 0.0) {
        return Err(Error::domain("received_symbol_power", "must be positive"));
    }
    Ok(streams as f64 * received_symbol_power / (code_rate * bits_per_symbol as f64 * 10f64.powf(snr_db / 10.0)))
}

/// Noise variance for the scenario, with `sigma_sr^2 = sigma_s^2 E[|gamma|^2]`.
pub fn snr_to_noise_variance(
    snr_db: f64,
    cfg: &SystemConfig,
    code_rate: f64,
    bits_per_symbol: usize,
    mean_gamma_sq: f64,
) -> Result<f64> {
    if !(mean_gamma_sq > 0.0) {
        return Err(Error::domain("mean_gamma_sq", "must be positive"));
    }
    noise_variance_for(
        snr_db,
        cfg.n_streams(),
        cfg.symbol_power * mean_gamma_sq,
        code_rate,
        bits_per_symbol,
    )
}

/// Closed-form `E[|gamma|^2] = E[L] E[d^-tau] E[beta^2]` for the scenario's link
/// distributions; the three factors are drawn independently.
pub fn mean_gamma_sq(cfg: &SystemConfig) -> Result<f64> {
    cfg.validate()?;
    let r = cfg.distance_range;
    let tau = cfg.path_loss_exp;
    let dist = if cfg.distance_step > 0.0 {
        let steps = ((r.hi - r.lo) / cfg.distance_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|i| (r.lo + i as f64 * cfg.distance_step).min(r.hi).powf(-tau))
            .sum::<f64>()
            / (steps + 1) as f64
    } else if r.is_constant() {
        r.lo.powf(-tau)
    } else if (tau - 1.0).abs() < 1e-12 {
        (r.hi / r.lo).ln() / (r.hi - r.lo)
    } else {
        (r.hi.powf(1.0 - tau) - r.lo.powf(1.0 - tau)) / ((1.0 - tau) * (r.hi - r.lo))
    };
    let path = 0.5 * (cfg.path_gain_range.lo + cfg.path_gain_range.hi);
    let s = 2.0 * cfg.shadow_spread_db * std::f64::consts::LN_10 / 10.0;
    Ok(path * dist * (0.5 * s * s).exp())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E[|gamma|^2]` over all links of `n_draws` large-scale draws.
pub fn estimate_mean_gamma_sq<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    n_draws: usize,
    rng: &mut R,
) -> Result<MeanEstimate> {
    if n_draws < 1000 {
        return Err(Error::domain("n_draws", format!("{n_draws} < 1000")));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for _ in 0..n_draws {
        for g in draw_large_scale(cfg, rng).gammas() {
            let p = g * g;
            sum += p;
            sum_sq += p * p;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0) * count as f64 / (count as f64 - 1.0);
    Ok(MeanEstimate {
        mean,
        std_err: (var / count as f64).sqrt(),
        samples: count,
    })
}
