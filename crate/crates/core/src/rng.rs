//! Single-seed policy and deterministic sub-stream derivation.
//!
//! Every stochastic routine in the toolkit draws from a ChaCha12 stream
//! derived from one configured `u64` seed, so a run is reproducible from its
//! config alone. Independent consumers (the trial loop, each coverage
//! replica, each optimizer restart) get their own sub-stream so that adding
//! or reordering consumers never perturbs the others.
//!
//! Sub-stream derivation: the seed, a FNV-1a hash of the consumer label, and
//! the consumer index are combined through two rounds of the SplitMix64
//! finalizer:
//!
//! ```text
//! s = splitmix64(seed ^ fnv1a(label))
//! s = splitmix64(s ^ index)
//! ```
//!
//! and `s` seeds a fresh ChaCha12 generator. SplitMix64's finalizer is a
//! bijection with good avalanche behavior, so distinct `(label, index)`
//! pairs map to well-separated generator states.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The concrete generator used everywhere.
pub type Rng = ChaCha12Rng;

/// Default seed used by the command-line tools when the config omits one.
pub const DEFAULT_SEED: u64 = 1;

/// SplitMix64 finalizer (Stafford's MurmurHash3 variant 13 constants).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes.
fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Root generator for a run.
pub fn root(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derived `u64` seed for the sub-stream `(label, index)`; useful where a
/// consumer needs a plain seed (e.g. to run a whole nested experiment) rather
/// than a generator.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(label)) ^ index)
}

/// Deterministic sub-stream `(label, index)` of a seed.
pub fn substream(seed: u64, label: &str, index: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, label, index))
}
