//! Deterministic random substreams.
//!
//! Every random quantity in a simulation is drawn from a ChaCha stream keyed by the
//! master seed and a short path of tags (SNR index, trial index, purpose, user).
//! Work items can therefore run in any order, on any thread, and still draw
//! identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a substream is used for. The discriminant is part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    LargeScale = 1,
    SmallScale = 2,
    Payload = 3,
    Frame = 4,
    Noise = 5,
    GammaEstimate = 6,
    TestData = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of tags into a 64-bit key.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &tag in path {
        h = splitmix64(h ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn substream(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_key(master, path))
}

/// Stream for one purpose inside one trial.
pub fn trial_stream(master: u64, snr_index: usize, trial: usize, purpose: Purpose, sub: u64) -> SimRng {
    substream(master, &[snr_index as u64, trial as u64, purpose as u64, sub])
}
