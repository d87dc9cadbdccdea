//! Seeded, splittable random streams.
//!
//! Every trial derives its own seed from `(master_seed, labels...)` with a
//! SplitMix64 mixer, so results never depend on the order in which trials
//! are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::complex::C64;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for a labelled sub-stream of `master`.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(master), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Stream for a 64-bit seed. The 256-bit ChaCha key is expanded with SplitMix64.
pub fn rng_from_seed(seed: u64) -> Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn child_rng(master: u64, labels: &[u64]) -> Rng {
    rng_from_seed(derive_seed(master, labels))
}

/// One draw from `CN(0, variance)`.
#[inline]
pub fn complex_normal(rng: &mut Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

pub fn complex_normal_vec(rng: &mut Rng, len: usize, variance: f64) -> Vec<C64> {
    (0..len).map(|_| complex_normal(rng, variance)).collect()
}
