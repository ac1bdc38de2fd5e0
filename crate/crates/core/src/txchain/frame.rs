use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::sysmodel::SystemConfig;
use crate::txchain::{conv_encode, interleave, Bit, Permutation, Qpsk, TrellisSpec};

/// Per-stream information bits for one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePayload {
    pub bits: Vec<Vec<Bit>>,
}

impl FramePayload {
    pub fn random<R: Rng + ?Sized>(streams: usize, bits_per_stream: usize, rng: &mut R) -> Self {
        let bits = (0..streams)
            .map(|_| (0..bits_per_stream).map(|_| rng.random::<bool>() as Bit).collect())
            .collect();
        Self { bits }
    }

    pub fn streams(&self) -> usize {
        self.bits.len()
    }
}

/// One packet for every stream: pilots followed by data symbols.
#[derive(Debug, Clone)]
pub struct SymbolFrame {
    pub info_bits: Vec<Vec<Bit>>,
    pub coded_bits: Vec<Vec<Bit>>,
    pub interleaved_bits: Vec<Vec<Bit>>,
    pub permutations: Vec<Permutation>,
    /// `streams x N_p` known training symbols.
    pub pilots: CMat,
    /// `streams x P` data symbols.
    pub data: CMat,
    pub modulation: Qpsk,
}

impl SymbolFrame {
    pub fn streams(&self) -> usize {
        self.data.nrows()
    }

    pub fn pilot_len(&self) -> usize {
        self.pilots.ncols()
    }

    pub fn data_len(&self) -> usize {
        self.data.ncols()
    }

    pub fn len(&self) -> usize {
        self.pilot_len() + self.data_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All symbols in transmission order, `streams x (N_p + P)`.
    pub fn symbols(&self) -> CMat {
        let mut s = CMat::zeros(self.streams(), self.len());
        s.columns_mut(0, self.pilot_len()).copy_from(&self.pilots);
        s.columns_mut(self.pilot_len(), self.data_len()).copy_from(&self.data);
        s
    }
}

/// Builds a packet. With `coding`, each stream's bits are convolutionally encoded
/// (zero-tail) and interleaved by an independent random permutation; without it
/// the bits are mapped directly. Pilots are random QPSK symbols. Permutations are
/// drawn before pilots, both from `rng`.
pub fn assemble_frame<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    payload: &FramePayload,
    pilot_len: usize,
    coding: Option<&TrellisSpec>,
    rng: &mut R,
) -> Result<SymbolFrame> {
    let streams = cfg.n_streams();
    if payload.streams() != streams {
        return Err(Error::dims("assemble_frame streams", streams, payload.streams()));
    }
    let modulation = Qpsk::new(cfg.symbol_power);
    let coded_bits: Vec<Vec<Bit>> = match coding {
        Some(t) => payload.bits.iter().map(|b| conv_encode(b, t)).collect(),
        None => payload.bits.clone(),
    };
    let coded_len = coded_bits.first().map_or(0, Vec::len);
    if coded_bits.iter().any(|b| b.len() != coded_len) {
        return Err(Error::domain("payload", "streams carry different bit counts"));
    }
    if coded_len % Qpsk::BITS_PER_SYMBOL != 0 {
        return Err(Error::domain(
            "payload",
            format!("{coded_len} coded bits do not fill QPSK symbols"),
        ));
    }
    let permutations: Vec<Permutation> = (0..streams)
        .map(|_| match coding {
            Some(_) => Permutation::random(coded_len, rng),
            None => Permutation::identity(coded_len),
        })
        .collect();
    let interleaved_bits = coded_bits
        .iter()
        .zip(&permutations)
        .map(|(b, p)| interleave(b, p))
        .collect::<Result<Vec<_>>>()?;

    let pts = modulation.points();
    let pilots = CMat::from_fn(streams, pilot_len, |_, _| pts[rng.random_range(0..4)]);
    let data_len = coded_len / 2;
    let mut data = CMat::zeros(streams, data_len);
    for (j, bits) in interleaved_bits.iter().enumerate() {
        for (i, sym) in modulation.map_bits(bits).into_iter().enumerate() {
            data[(j, i)] = sym;
        }
    }
    Ok(SymbolFrame {
        info_bits: payload.bits.clone(),
        coded_bits,
        interleaved_bits,
        permutations,
        pilots,
        data,
        modulation,
    })
}

/// `r = G s + n` for a single symbol vector.
pub fn channel_transmit<R: Rng + ?Sized>(g: &CMat, s: &CVec, noise_var: f64, rng: &mut R) -> Result<CVec> {
    if g.ncols() != s.len() {
        return Err(Error::dims("channel_transmit", g.ncols(), s.len()));
    }
    let mut r = g * s;
    if noise_var > 0.0 {
        let sd = noise_var.sqrt();
        for x in r.iter_mut() {
            *x += linalg::complex_gaussian(rng) * sd;
        }
    }
    Ok(r)
}

/// `R = G S + N` for a block of symbol vectors (one per column).
pub fn transmit_block<R: Rng + ?Sized>(g: &CMat, s: &CMat, noise_var: f64, rng: &mut R) -> Result<CMat> {
    if g.ncols() != s.nrows() {
        return Err(Error::dims("transmit_block", g.ncols(), s.nrows()));
    }
    if noise_var < 0.0 {
        return Err(Error::domain("noise_var", "must be >= 0"));
    }
    let mut r = g * s;
    if noise_var > 0.0 {
        let sd = C64::new(noise_var.sqrt(), 0.0);
        for j in 0..r.ncols() {
            for i in 0..r.nrows() {
                r[(i, j)] += linalg::complex_gaussian(rng) * sd;
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity};
    use crate::rng::substream;

    fn cfg() -> SystemConfig {
        SystemConfig::cas(4, 2, 1)
    }

    #[test]
    fn pilot_free_frame() {
        let mut rng = substream(1, &[]);
        let payload = FramePayload::random(2, 3000, &mut rng);
        let f = assemble_frame(&cfg(), &payload, 0, None, &mut rng).unwrap();
        assert_eq!(f.len(), 1500);
        assert_eq!(f.pilot_len(), 0);
        assert_eq!(f.data_len(), 1500);
    }

    #[test]
    fn coded_frame_with_pilots() {
        let mut rng = substream(2, &[]);
        let t = TrellisSpec::default();
        let payload = FramePayload::random(2, 1498, &mut rng);
        let f = assemble_frame(&cfg(), &payload, 250, Some(&t), &mut rng).unwrap();
        assert_eq!(f.len(), 1750);
        assert_eq!(f.coded_bits[0].len(), 2 * 1500);
        let s = f.symbols();
        assert_eq!(s.ncols(), 1750);
        assert_eq!(s[(1, 250)], f.data[(1, 0)]);
    }

    #[test]
    fn same_seed_same_pilots() {
        let payload = FramePayload::random(2, 10, &mut substream(0, &[]));
        let a = assemble_frame(&cfg(), &payload, 50, None, &mut substream(3, &[])).unwrap();
        let b = assemble_frame(&cfg(), &payload, 50, None, &mut substream(3, &[])).unwrap();
        assert_eq!(a.pilots, b.pilots);
    }

    #[test]
    fn symbol_power_matches() {
        let mut rng = substream(4, &[]);
        let mut cfg = cfg();
        cfg.symbol_power = 2.0;
        let payload = FramePayload::random(2, 10_000, &mut rng);
        let f = assemble_frame(&cfg, &payload, 5000, None, &mut rng).unwrap();
        let s = f.symbols();
        let p = s.iter().map(|x| x.norm_sqr()).sum::<f64>() / s.len() as f64;
        // QPSK has constant modulus
        assert!((p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transmit_noiseless_identity() {
        let s = CVec::from_vec(vec![c(1.0, -1.0), c(0.5, 0.5)]);
        let r = channel_transmit(&identity(2), &s, 0.0, &mut substream(0, &[])).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn transmit_zero_signal_is_noise() {
        let mut rng = substream(6, &[]);
        let n = 10_000;
        let s = CMat::zeros(2, n);
        let r = transmit_block(&identity(2), &s, 2.0, &mut rng).unwrap();
        let cov = &r * r.adjoint() / C64::new(n as f64, 0.0);
        // sample variance of |n|^2 with E = 2 has std 2/sqrt(n)
        let tol = 3.0 * 2.0 / (n as f64).sqrt();
        assert!((cov[(0, 0)].re - 2.0).abs() < tol);
        assert!((cov[(1, 1)].re - 2.0).abs() < tol);
        assert!(cov[(0, 1)].norm() < tol);
    }

    #[test]
    fn dimension_mismatch() {
        let s = CVec::zeros(3);
        assert!(channel_transmit(&identity(2), &s, 0.0, &mut substream(0, &[])).is_err());
    }
}
