//! Counter-based random streams.
//!
//! Every random quantity in a sweep is drawn from its own ChaCha stream
//! keyed by `(seed, tag, outer, inner)`, so the numbers a frame sees do not
//! depend on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    /// Channel draw, keyed by block index only. Shared across SNR points.
    Channel = 1,
    /// Payload bits, keyed by frame index only.
    Data = 2,
    /// Thermal noise, keyed by SNR index and frame index.
    Noise = 3,
}

const OUTER_BITS: u32 = 16;
const INNER_BITS: u32 = 40;

/// Stream for `(tag, outer, inner)`. `outer` must fit in 16 bits and
/// `inner` in 40 bits.
pub fn stream(seed: u64, tag: StreamTag, outer: u64, inner: u64) -> ChaCha8Rng {
    assert!(outer < 1 << OUTER_BITS, "stream outer index {outer} out of range");
    assert!(inner < 1 << INNER_BITS, "stream inner index {inner} out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << (OUTER_BITS + INNER_BITS)) | (outer << INNER_BITS) | inner);
    rng
}

pub fn channel_stream(seed: u64, block: u64) -> ChaCha8Rng {
    stream(seed, StreamTag::Channel, 0, block)
}

pub fn data_stream(seed: u64, frame: u64) -> ChaCha8Rng {
    stream(seed, StreamTag::Data, 0, frame)
}

pub fn noise_stream(seed: u64, snr_index: usize, frame: u64) -> ChaCha8Rng {
    stream(seed, StreamTag::Noise, snr_index as u64, frame)
}
