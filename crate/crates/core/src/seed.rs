//! Labeled seed substreams.
//!
//! Every stochastic stage draws from a ChaCha stream keyed by the master seed
//! and a stream id derived from a stage label plus an index. Adding a stage
//! or a player never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Stable 64-bit id for `(label, index)`.
pub fn stream_id(label: &str, index: u64) -> u64 {
    let h = fnv1a(label.as_bytes(), FNV_OFFSET);
    fnv1a(&index.to_le_bytes(), h)
}

/// Deterministic generator for one labeled substream of `master`.
pub fn substream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(label, index));
    rng
}

/// A derived 64-bit seed, for APIs that take a plain seed rather than a
/// generator.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    substream(master, label, index).next_u64()
}
