//! Seeded random streams.
//!
//! Every random quantity in an experiment is drawn from a ChaCha stream whose
//! key is the master seed and whose stream id is a hash of a small tuple of
//! indices (purpose tag, sweep point, trial). Results therefore do not depend
//! on which thread evaluates a trial or in which order trials run.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, key...)`.
pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    let mut id = 0x5eed_u64;
    for &k in key {
        id = splitmix(id ^ k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Purpose tags used as the first stream key component.
pub mod tag {
    pub const TRIAL: u64 = 1;
    pub const BANK: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const VALIDATION: u64 = 4;
    pub const INIT: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const MODEL: u64 = 7;
}

/// Circularly-symmetric standard complex normal: E|z|^2 = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
