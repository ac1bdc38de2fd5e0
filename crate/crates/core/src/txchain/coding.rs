use crate::error::{Error, Result};

pub type Bit = u8;

/// Feedforward (non-recursive) convolutional code of rate `1/n`.
///
/// Generator taps are read MSB first: the most significant of the
/// `constraint_length` bits multiplies the current input, the least significant
/// the oldest stored bit. The default is the `(7, 5)` octal code of constraint
/// length 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrellisSpec {
    pub constraint_length: usize,
    pub generators: Vec<u32>,
}

impl Default for TrellisSpec {
    fn default() -> Self {
        Self {
            constraint_length: 3,
            generators: vec![0o7, 0o5],
        }
    }
}

impl TrellisSpec {
    pub fn new(constraint_length: usize, generators: Vec<u32>) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::domain("constraint_length", "must be in 2..=16"));
        }
        if generators.is_empty() {
            return Err(Error::domain("generators", "need at least one generator"));
        }
        let limit = 1u32 << constraint_length;
        if generators.iter().any(|&g| g == 0 || g >= limit) {
            return Err(Error::domain("generators", "taps exceed the constraint length"));
        }
        Ok(Self {
            constraint_length,
            generators,
        })
    }

    pub fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    pub fn outputs_per_step(&self) -> usize {
        self.generators.len()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.generators.len() as f64
    }

    /// Coded length of a zero-tail terminated block of `info_len` bits.
    pub fn coded_len(&self, info_len: usize) -> usize {
        (info_len + self.memory()) * self.outputs_per_step()
    }

    /// Output bits and next state for `input` leaving `state`.
    ///
    /// The state holds the last `memory` inputs, newest in the MSB.
    pub fn step(&self, state: usize, input: Bit) -> (usize, u32) {
        let reg = ((input as usize) << self.memory()) | state;
        let mut out = 0u32;
        for (i, &g) in self.generators.iter().enumerate() {
            let parity = ((reg as u32) & g).count_ones() & 1;
            out |= parity << i;
        }
        (reg >> 1, out)
    }
}

/// Encodes `info_bits` starting from the all-zero state and appends `memory`
/// zero tail bits so the encoder ends in state zero.
pub fn conv_encode(info_bits: &[Bit], trellis: &TrellisSpec) -> Vec<Bit> {
    let n_out = trellis.outputs_per_step();
    let mut coded = Vec::with_capacity(trellis.coded_len(info_bits.len()));
    let mut state = 0usize;
    let tail = std::iter::repeat_n(0, trellis.memory());
    for bit in info_bits.iter().copied().chain(tail) {
        let (next, out) = trellis.step(state, bit & 1);
        for i in 0..n_out {
            coded.push(((out >> i) & 1) as Bit);
        }
        state = next;
    }
    coded
}
