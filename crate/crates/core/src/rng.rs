//! Seed handling.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by a
//! `(master seed, stream id)` pair. ChaCha is a counter-based generator, so a
//! stream can be opened independently of any other and ensembles do not depend
//! on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved for the different consumers of a realization seed.
pub mod streams {
    pub const POISSON_FIELD: u64 = 0x10;
    pub const GAUSSIAN_FIELD: u64 = 0x20;
    pub const TRAJECTORY: u64 = 0x30;
    pub const DERIVE: u64 = 0x40;
}

/// Opens the generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives the child seed with index `index` from `master`.
///
/// The child depends only on `(master, index)`, never on how many other
/// children were derived before it.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = stream(master, streams::DERIVE);
    // Each child owns one 64-bit word of the derivation stream.
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}
