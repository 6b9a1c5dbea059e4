//! Seed derivation. Every random draw in the crate comes from a generator
//! keyed by a master seed plus integer coordinates, so results do not depend
//! on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of coordinates into a fresh 64-bit seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(master), |acc, &c| {
        splitmix64(acc ^ splitmix64(c))
    })
}

pub fn rng_for(master: u64, coords: &[u64]) -> TrialRng {
    TrialRng::seed_from_u64(derive_seed(master, coords))
}

/// Counter-based shared randomness: both parties evaluate the same
/// `(row, column)` cell without communicating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedRandomness {
    key: u64,
}

impl SharedRandomness {
    pub fn new(master: u64) -> Self {
        Self {
            key: splitmix64(master ^ 0x5348_4152_4544),
        }
    }

    /// Uniform in `[0, 1)` for cell `(row, col)` and sub-stream `lane`.
    pub fn uniform(&self, row: u64, col: u64, lane: u64) -> f64 {
        let bits = derive_seed(self.key, &[row, col, lane]);
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
