//! Keyed random streams.
//!
//! A [`StreamKey`] names an independent ChaCha8 stream. Keys form a tree:
//! `master.derive(rep).derive(BASE_WALK)` and so on, so a replication's
//! randomness depends only on its position in the tree and never on the
//! order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Child tag for the base walk of a replication.
pub const BASE_WALK: u64 = 0x6261_7365;
/// Child tag for triangular-array increments.
pub const ARRAY: u64 = 0x6172_7261;
/// Child tag for the continuation of a base walk beyond its first horizon.
pub const EXTENSION: u64 = 0x6578_7465;
/// Child tag for linear-setting walks.
pub const LINEAR: u64 = 0x6c69_6e65;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    words: [u64; 4],
}

impl StreamKey {
    pub fn new(master: u64) -> Self {
        let h = splitmix(master);
        StreamKey {
            words: [h, splitmix(h ^ 1), splitmix(h ^ 2), splitmix(h ^ 3)],
        }
    }

    /// Child key. Order-sensitive: `k.derive(a).derive(b) != k.derive(b).derive(a)`.
    pub fn derive(self, index: u64) -> Self {
        let mut h = splitmix(index ^ 0xD1B5_4A32_D192_ED03);
        for w in self.words {
            h = splitmix(h ^ w);
        }
        let mut words = [0u64; 4];
        for (i, slot) in words.iter_mut().enumerate() {
            *slot = splitmix(h.wrapping_add((i as u64).wrapping_mul(GOLDEN)));
        }
        StreamKey { words }
    }

    pub fn rng(self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Runs `f` once per replication with key `master.derive(rep)`, in parallel.
///
/// Output order is replication order, whatever the thread count.
pub fn par_replicate<T, F>(reps: u64, master: StreamKey, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, StreamKey) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|rep| f(rep, master.derive(rep)))
        .collect()
}
