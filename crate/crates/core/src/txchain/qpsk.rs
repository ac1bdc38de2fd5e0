use crate::linalg::C64;
use crate::txchain::Bit;

/// Gray-labelled QPSK with symbol energy `sigma_s^2`.
///
/// Bit pair `(b0, b1)` maps to `sigma_s / sqrt(2) * ((1 - 2 b0) + j (1 - 2 b1))`, so
/// `00 -> (+1+j)`, `01 -> (+1-j)`, `10 -> (-1+j)`, `11 -> (-1-j)` (before scaling).
/// Point index `2 b0 + b1` addresses [`Qpsk::points`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qpsk {
    amplitude: f64,
}

impl Default for Qpsk {
    fn default() -> Self {
        Self::new(1.0)
    }
}

impl Qpsk {
    pub const BITS_PER_SYMBOL: usize = 2;

    pub fn new(symbol_power: f64) -> Self {
        Self {
            amplitude: (symbol_power / 2.0).sqrt(),
        }
    }

    /// Per-dimension amplitude `sigma_s / sqrt(2)`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn symbol_power(&self) -> f64 {
        2.0 * self.amplitude * self.amplitude
    }

    pub fn map(&self, b0: Bit, b1: Bit) -> C64 {
        let re = if b0 & 1 == 0 { 1.0 } else { -1.0 };
        let im = if b1 & 1 == 0 { 1.0 } else { -1.0 };
        C64::new(re * self.amplitude, im * self.amplitude)
    }

    /// Nearest point's bits. An exactly zero component decides bit 0.
    pub fn slice(&self, z: C64) -> (Bit, Bit) {
        ((z.re < 0.0) as Bit, (z.im < 0.0) as Bit)
    }

    /// Nearest constellation point.
    pub fn quantize(&self, z: C64) -> C64 {
        let (b0, b1) = self.slice(z);
        self.map(b0, b1)
    }

    pub fn points(&self) -> [C64; 4] {
        [self.map(0, 0), self.map(0, 1), self.map(1, 0), self.map(1, 1)]
    }

    /// Bits of point `index` in [`Qpsk::points`] order.
    pub fn point_bits(index: usize) -> (Bit, Bit) {
        (((index >> 1) & 1) as Bit, (index & 1) as Bit)
    }

    /// Maps a bit sequence of even length pairwise.
    pub fn map_bits(&self, bits: &[Bit]) -> Vec<C64> {
        bits.chunks_exact(2).map(|p| self.map(p[0], p[1])).collect()
    }
}
