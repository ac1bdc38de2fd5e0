//! Transmit chain: convolutional encoding, interleaving, QPSK mapping, pilot
//! insertion and the flat-fading channel `r = G s + n`.

mod coding;
mod frame;
mod interleave;
mod qpsk;

pub use coding::{conv_encode, Bit, TrellisSpec};
pub use frame::{assemble_frame, channel_transmit, transmit_block, FramePayload, SymbolFrame};
pub use interleave::{deinterleave, interleave, Permutation};
pub use qpsk::Qpsk;
