//! Iterative detection and decoding.
//!
//! LLRs are `log P(b = 0) / P(b = 1)`; bit 0 maps to the positive QPSK component,
//! so a positive LLR favours the `+` side of the constellation.

mod bcjr;
mod receiver;
mod soft;

pub use bcjr::{bcjr_decode, BcjrOutput};
pub use receiver::{idd_receive, linear_soft_receive, IddConfig, IddOutput};
pub use soft::{
    estimate_effective_channel, extrinsic_llr, soft_mmse_sic_detect, soft_symbol_stats, EffectiveChannel,
    SoftSymbolStats, MIN_EFFECTIVE_SAMPLES,
};

/// LLR magnitudes are clipped here.
pub const LLR_CLIP: f64 = 50.0;

pub fn clip_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLIP, LLR_CLIP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrRole {
    /// Decoder extrinsic fed back to the detector.
    Prior,
    /// Detector extrinsic.
    DetectorExtrinsic,
    /// Decoder extrinsic.
    DecoderExtrinsic,
    APosteriori,
}

/// Per-stream LLRs of the coded bits, indexed `[stream][2 * symbol + bit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    pub role: LlrRole,
    pub values: Vec<Vec<f64>>,
}

impl LlrBlock {
    pub fn zeros(role: LlrRole, streams: usize, symbols: usize) -> Self {
        Self {
            role,
            values: vec![vec![0.0; 2 * symbols]; streams],
        }
    }

    pub fn streams(&self) -> usize {
        self.values.len()
    }

    pub fn symbols(&self) -> usize {
        self.values.first().map_or(0, |v| v.len() / 2)
    }

    pub fn get(&self, stream: usize, symbol: usize, bit: usize) -> f64 {
        self.values[stream][2 * symbol + bit]
    }

    /// The two priors of one symbol.
    pub fn pair(&self, stream: usize, symbol: usize) -> [f64; 2] {
        let v = &self.values[stream];
        [v[2 * symbol], v[2 * symbol + 1]]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|x| x.is_finite())
    }
}
