//! Seed-derived random streams.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, domain, index)`,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domain for crosstalk estimation trials.
pub const DOMAIN_CROSSTALK: u64 = 1;
/// Stream domain for protocol symbols.
pub const DOMAIN_BB84: u64 = 2;
/// Stream domain for preset calibration.
pub const DOMAIN_CALIBRATION: u64 = 3;

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream for one work item.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(domain)));
    rng.set_stream(index);
    rng
}
