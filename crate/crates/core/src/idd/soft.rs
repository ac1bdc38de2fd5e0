use crate::error::{Error, Result};
use crate::idd::{clip_llr, LLR_CLIP};
use crate::linalg::{self, CMat, CVec, C64};
use crate::txchain::Qpsk;

/// Fewer samples than this make the effective-channel estimate unreliable.
pub const MIN_EFFECTIVE_SAMPLES: usize = 32;

/// Soft estimate of one transmitted symbol from its bit priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftSymbolStats {
    pub mean: C64,
    pub variance: f64,
}

/// Gain and residual variance of the model `z = V s + xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannel {
    pub gain: f64,
    pub residual_var: f64,
    pub samples: usize,
}

impl EffectiveChannel {
    pub fn low_sample_count(&self) -> bool {
        self.samples < MIN_EFFECTIVE_SAMPLES
    }
}

/// Mean and variance of a Gray QPSK symbol whose two bits are independent with
/// the given LLRs. The components factor: `E[re] = A tanh(l0 / 2)`.
pub fn soft_symbol_stats(priors: [f64; 2], modulation: &Qpsk) -> SoftSymbolStats {
    let a = modulation.amplitude();
    let mean = C64::new(
        a * (clip_llr(priors[0]) / 2.0).tanh(),
        a * (clip_llr(priors[1]) / 2.0).tanh(),
    );
    let variance = (modulation.symbol_power() - mean.norm_sqr()).max(0.0);
    SoftSymbolStats { mean, variance }
}

/// Precomputed per-packet quantities for [`soft_mmse_sic_detect`].
#[derive(Debug, Clone)]
pub(crate) struct SoftMmseKernel {
    g_h: CMat,
    gram: CMat,
    noise_var: f64,
    symbol_power: f64,
}

impl SoftMmseKernel {
    pub(crate) fn new(g: &CMat, noise_var: f64, symbol_power: f64) -> Result<Self> {
        if !(noise_var >= 0.0) {
            return Err(Error::domain("noise_var", "must be >= 0"));
        }
        if !(symbol_power > 0.0) {
            return Err(Error::domain("symbol_power", "must be positive"));
        }
        let g_h = g.adjoint();
        let gram = &g_h * g;
        let n = gram.nrows().max(1);
        let mean_diag = gram.diagonal().iter().map(|x| x.re).sum::<f64>() / n as f64;
        // a noiseless link still needs an invertible system once all priors are certain
        let floor = 1e-12 * symbol_power * mean_diag.max(f64::MIN_POSITIVE);
        Ok(Self {
            g_h,
            gram,
            noise_var: noise_var.max(floor),
            symbol_power,
        })
    }

    /// Filter outputs for one received vector.
    ///
    /// Stream `j` is filtered after soft cancellation of every other stream, with an
    /// MMSE filter matched to the residual covariance
    /// `sum_{m != j} v_m g_m g_m^H + sigma_n^2 I`. Working in the stream domain,
    /// with `B = G^H G diag(v) + sigma_n^2 I`, this is
    /// `z_j = sigma_s^2 (q_j + D_jj m_j) / (1 + (sigma_s^2 - v_j) D_jj)` where
    /// `q = B^-1 (G^H r - G^H G m)` and `D = B^-1 G^H G`.
    pub(crate) fn apply(&self, r: &CVec, stats: &[SoftSymbolStats]) -> Result<CVec> {
        let n = self.gram.nrows();
        if stats.len() != n {
            return Err(Error::dims("soft stats", n, stats.len()));
        }
        if r.len() != self.g_h.ncols() {
            return Err(Error::dims("received vector", self.g_h.ncols(), r.len()));
        }
        let means = CVec::from_iterator(n, stats.iter().map(|s| s.mean));
        let mut b = CMat::zeros(n, n);
        for (col, st) in stats.iter().enumerate() {
            let v = C64::new(st.variance, 0.0);
            for row in 0..n {
                b[(row, col)] = self.gram[(row, col)] * v;
            }
        }
        for i in 0..n {
            b[(i, i)] += C64::new(self.noise_var, 0.0);
        }
        let mut rhs = CMat::zeros(n, n + 1);
        let y = &self.g_h * r - &self.gram * &means;
        rhs.set_column(0, &y);
        rhs.columns_mut(1, n).copy_from(&self.gram);
        let x =
            linalg::solve_general(&b, &rhs).ok_or_else(|| Error::Numerical("soft MMSE system is singular".into()))?;
        let ss = self.symbol_power;
        Ok(CVec::from_fn(n, |j, _| {
            let d = x[(j, j + 1)].re;
            let c = ss / (1.0 + (ss - stats[j].variance) * d);
            (x[(j, 0)] + means[j] * d) * c
        }))
    }
}

/// Soft-cancellation MMSE outputs `z_j` for one received vector.
pub fn soft_mmse_sic_detect(
    r: &CVec,
    g: &CMat,
    stats: &[SoftSymbolStats],
    noise_var: f64,
    symbol_power: f64,
) -> Result<CVec> {
    SoftMmseKernel::new(g, noise_var, symbol_power)?.apply(r, stats)
}

/// Sample estimates `V = Re(mean(s* z)) / sigma_s^2` and `sigma^2 = mean |z - V s|^2`.
pub fn estimate_effective_channel(z: &[C64], reference: &[C64], symbol_power: f64) -> Result<EffectiveChannel> {
    if z.len() != reference.len() {
        return Err(Error::dims("effective channel", reference.len(), z.len()));
    }
    if z.is_empty() {
        return Err(Error::domain("z", "need at least one sample"));
    }
    let n = z.len() as f64;
    let corr: C64 = z.iter().zip(reference).map(|(z, s)| s.conj() * z).sum();
    // For constant-modulus references the sample power equals sigma_s^2; using it
    // keeps `z = V s` exact under rounding.
    let power: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    let gain = if power > 0.0 {
        corr.re / power
    } else {
        corr.re / n / symbol_power
    };
    let residual_var = z
        .iter()
        .zip(reference)
        .map(|(z, s)| (z - s * gain).norm_sqr())
        .sum::<f64>()
        / n;
    Ok(EffectiveChannel {
        gain,
        residual_var,
        samples: z.len(),
    })
}

fn max_star(a: f64, b: f64, maxlog: bool) -> f64 {
    let m = a.max(b);
    if maxlog || m == f64::NEG_INFINITY {
        m
    } else {
        m + (-(a - b).abs()).exp().ln_1p()
    }
}

/// Detector extrinsic LLRs of the two bits of one symbol.
///
/// Each constellation point is weighted by `exp(-|z - V S|^2 / (2 sigma^2))` and
/// by the prior of the *other* bit only, so the result does not depend on the
/// bit's own prior.
pub fn extrinsic_llr(
    z: C64,
    channel: &EffectiveChannel,
    priors: [f64; 2],
    modulation: &Qpsk,
    maxlog: bool,
) -> [f64; 2] {
    let pts = modulation.points();
    let dist: Vec<f64> = pts.iter().map(|&s| (z - s * channel.gain).norm_sqr()).collect();
    let scale = 2.0 * channel.residual_var;
    let mut out = [0.0; 2];
    for (c, slot) in out.iter_mut().enumerate() {
        let other = 1 - c;
        let mut acc = [f64::NEG_INFINITY; 2];
        for (idx, &d) in dist.iter().enumerate() {
            let (b0, b1) = Qpsk::point_bits(idx);
            let bits = [b0, b1];
            let x_other = if bits[other] == 0 { 1.0 } else { -1.0 };
            let metric = -d / scale + x_other * clip_llr(priors[other]) / 2.0;
            let side = bits[c] as usize;
            acc[side] = max_star(acc[side], metric, maxlog);
        }
        let llr = acc[0] - acc[1];
        *slot = if llr.is_finite() {
            clip_llr(llr)
        } else {
            // zero residual variance: decide by the nearest point on each side
            let near = |side: u8| {
                dist.iter()
                    .enumerate()
                    .filter(|(i, _)| [Qpsk::point_bits(*i).0, Qpsk::point_bits(*i).1][c] == side)
                    .map(|(_, d)| *d)
                    .fold(f64::INFINITY, f64::min)
            };
            let (d0, d1) = (near(0), near(1));
            if d0 < d1 {
                LLR_CLIP
            } else if d1 < d0 {
                -LLR_CLIP
            } else {
                0.0
            }
        };
    }
    out
}
