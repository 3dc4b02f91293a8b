//! Deterministic RNG streams keyed by integer coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with stream coordinates into a new seed.
pub fn mix(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(seed), |acc, &c| {
        splitmix64(acc ^ splitmix64(c.wrapping_add(0xA5A5)))
    })
}

/// An independent generator for `seed` at the given coordinates.
pub fn stream(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, coords))
}
