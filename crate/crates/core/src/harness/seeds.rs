//! Seed derivation. Every random quantity in a dataset comes from the
//! master seed through [`derive`], so any frame can be regenerated alone.

use crate::scene::splitmix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Independent streams under one parent seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Identity = 1,
    Slippage = 2,
    Noise = 3,
    Trial = 4,
}

/// `splitmix64(splitmix64(parent ^ stream * GOLDEN) ^ index)`.
pub fn derive(parent: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ (stream as u64).wrapping_mul(GOLDEN)) ^ index)
}

/// Seed that generates identity `id`.
pub fn identity_seed(identity_seed_base: u64, id: u64) -> u64 {
    derive(identity_seed_base, Stream::Identity, id)
}

fn frame_seed(master: u64, stream: Stream, id: u64, target: usize, slip: usize) -> u64 {
    let s = derive(master, stream, id);
    splitmix64(splitmix64(s ^ target as u64) ^ slip as u64)
}

pub fn slippage_seed(master: u64, id: u64, target: usize, slip: usize) -> u64 {
    frame_seed(master, Stream::Slippage, id, target, slip)
}

/// Sensor-noise seed of one frame; shared by every sweep value so that
/// configurations are compared under common random numbers.
pub fn noise_seed(master: u64, id: u64, target: usize, slip: usize) -> u64 {
    frame_seed(master, Stream::Noise, id, target, slip)
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive(master, Stream::Trial, trial as u64)
}
