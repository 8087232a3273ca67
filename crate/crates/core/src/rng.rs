//! Random streams. Every run owns a `Pcg64` (PCG XSL RR 128/64), a
//! portable generator whose output is identical on every platform.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

pub type SimRng = Pcg64;

pub fn rng_from_seed(seed: u64) -> SimRng {
    Pcg64::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` in an ensemble rooted at `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix(mix(base) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Exponential waiting time by inversion; `rate == 0` gives infinity.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}
