use crate::error::{Error, Result};
use crate::idd::soft::SoftMmseKernel;
use crate::idd::{
    bcjr_decode, estimate_effective_channel, extrinsic_llr, soft_symbol_stats, EffectiveChannel, LlrBlock, LlrRole,
    SoftSymbolStats,
};
use crate::linalg::{CMat, C64};
use crate::txchain::{deinterleave, interleave, Bit, Permutation, Qpsk, TrellisSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct IddConfig {
    /// Outer detector/decoder iterations.
    pub iterations: usize,
    pub maxlog: bool,
    pub trellis: TrellisSpec,
}

impl Default for IddConfig {
    fn default() -> Self {
        Self {
            iterations: 4,
            maxlog: false,
            trellis: TrellisSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IddOutput {
    /// Hard information bits after each outer iteration, `[iteration][stream][bit]`.
    pub info_bits: Vec<Vec<Vec<Bit>>>,
    /// Effective channel estimates used in each iteration, `[iteration][stream]`.
    pub effective: Vec<Vec<EffectiveChannel>>,
    /// Decoder extrinsic LLRs of the last iteration, in transmission order.
    pub priors: LlrBlock,
}

impl IddOutput {
    pub fn final_bits(&self) -> &[Vec<Bit>] {
        self.info_bits.last().map_or(&[], |v| v.as_slice())
    }
}

fn check_shapes(r: &CMat, streams: usize, permutations: &[Permutation]) -> Result<()> {
    if permutations.len() != streams {
        return Err(Error::dims("interleaver count", streams, permutations.len()));
    }
    let bits = 2 * r.ncols();
    if let Some(p) = permutations.iter().find(|p| p.len() != bits) {
        return Err(Error::dims("interleaver length", bits, p.len()));
    }
    Ok(())
}

/// Reference symbols for the effective-channel estimate: the decoder's a-posteriori
/// decisions when available, otherwise the slicer output.
fn reference_symbols(z: &[C64], app: Option<&[f64]>, modulation: &Qpsk) -> Vec<C64> {
    match app {
        Some(app) => app
            .chunks_exact(2)
            .map(|p| modulation.map((p[0] < 0.0) as Bit, (p[1] < 0.0) as Bit))
            .collect(),
        None => z.iter().map(|&x| modulation.quantize(x)).collect(),
    }
}

/// Detector LLRs of one stream, deinterleaved and decoded.
struct StreamPass {
    channel: EffectiveChannel,
    extrinsic_tx: Vec<f64>,
    app_tx: Vec<f64>,
    info_bits: Vec<Bit>,
}

#[allow(clippy::too_many_arguments)]
fn decode_stream(
    z: &[C64],
    priors: &[f64],
    app: Option<&[f64]>,
    perm: &Permutation,
    modulation: &Qpsk,
    symbol_power: f64,
    config: &IddConfig,
) -> Result<StreamPass> {
    let reference = reference_symbols(z, app, modulation);
    let channel = estimate_effective_channel(z, &reference, symbol_power)?;
    let mut lambda1 = Vec::with_capacity(2 * z.len());
    for (i, &zi) in z.iter().enumerate() {
        let l = extrinsic_llr(
            zi,
            &channel,
            [priors[2 * i], priors[2 * i + 1]],
            modulation,
            config.maxlog,
        );
        lambda1.extend_from_slice(&l);
    }
    let dec = bcjr_decode(&deinterleave(&lambda1, perm)?, &config.trellis, config.maxlog)?;
    Ok(StreamPass {
        channel,
        extrinsic_tx: interleave(&dec.extrinsic, perm)?,
        app_tx: interleave(&dec.coded_app, perm)?,
        info_bits: dec.info_bits,
    })
}

/// Iterative receiver: soft-cancellation MMSE detection exchanging extrinsic LLRs
/// with a BCJR decoder per stream.
///
/// `r` holds one received data vector per column; `permutations[j]` is the
/// interleaver of stream `j`.
pub fn idd_receive(
    r: &CMat,
    g: &CMat,
    noise_var: f64,
    symbol_power: f64,
    permutations: &[Permutation],
    config: &IddConfig,
) -> Result<IddOutput> {
    if config.iterations == 0 {
        return Err(Error::domain("idd.iterations", "must be at least 1"));
    }
    if r.nrows() != g.nrows() {
        return Err(Error::dims("idd_receive rows", g.nrows(), r.nrows()));
    }
    let streams = g.ncols();
    let symbols = r.ncols();
    check_shapes(r, streams, permutations)?;
    let modulation = Qpsk::new(symbol_power);
    let kernel = SoftMmseKernel::new(g, noise_var, symbol_power)?;

    let mut priors = LlrBlock::zeros(LlrRole::Prior, streams, symbols);
    let mut apps: Option<Vec<Vec<f64>>> = None;
    let mut info_bits = Vec::with_capacity(config.iterations);
    let mut effective = Vec::with_capacity(config.iterations);
    let mut stats = vec![
        SoftSymbolStats {
            mean: C64::new(0.0, 0.0),
            variance: symbol_power,
        };
        streams
    ];
    for _ in 0..config.iterations {
        let mut z = vec![vec![C64::new(0.0, 0.0); symbols]; streams];
        for i in 0..symbols {
            for (j, st) in stats.iter_mut().enumerate() {
                *st = soft_symbol_stats(priors.pair(j, i), &modulation);
            }
            let zi = kernel.apply(&r.column(i).into_owned(), &stats)?;
            for j in 0..streams {
                z[j][i] = zi[j];
            }
        }
        let mut bits = Vec::with_capacity(streams);
        let mut chans = Vec::with_capacity(streams);
        let mut next_apps = Vec::with_capacity(streams);
        for j in 0..streams {
            let app = apps.as_ref().map(|a| a[j].as_slice());
            let pass = decode_stream(
                &z[j],
                &priors.values[j],
                app,
                &permutations[j],
                &modulation,
                symbol_power,
                config,
            )?;
            priors.values[j] = pass.extrinsic_tx;
            next_apps.push(pass.app_tx);
            bits.push(pass.info_bits);
            chans.push(pass.channel);
        }
        apps = Some(next_apps);
        info_bits.push(bits);
        effective.push(chans);
    }
    Ok(IddOutput {
        info_bits,
        effective,
        priors,
    })
}

/// Non-iterative coded reception: linear filter outputs `W^H r`, Gaussian
/// demapping with zero priors and one BCJR pass per stream.
pub fn linear_soft_receive(
    r: &CMat,
    w: &CMat,
    symbol_power: f64,
    permutations: &[Permutation],
    config: &IddConfig,
) -> Result<IddOutput> {
    if r.nrows() != w.nrows() {
        return Err(Error::dims("linear_soft_receive rows", w.nrows(), r.nrows()));
    }
    let streams = w.ncols();
    let symbols = r.ncols();
    check_shapes(r, streams, permutations)?;
    let modulation = Qpsk::new(symbol_power);
    let z = w.adjoint() * r;
    let zero = vec![0.0; 2 * symbols];
    let mut priors = LlrBlock::zeros(LlrRole::Prior, streams, symbols);
    let mut bits = Vec::with_capacity(streams);
    let mut chans = Vec::with_capacity(streams);
    for j in 0..streams {
        let zj: Vec<C64> = z.row(j).iter().copied().collect();
        let pass = decode_stream(&zj, &zero, None, &permutations[j], &modulation, symbol_power, config)?;
        priors.values[j] = pass.extrinsic_tx;
        bits.push(pass.info_bits);
        chans.push(pass.channel);
    }
    Ok(IddOutput {
        info_bits: vec![bits],
        effective: vec![chans],
        priors,
    })
}
