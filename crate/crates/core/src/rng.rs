//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream whose seed is a
//! pure function of the run seed and a stream key, so results never depend
//! on the order in which independent pieces of work are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// Named purposes for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Environment = 1,
    Observation = 2,
    Planning = 3,
    Supplier = 4,
    Agent = 5,
    Scenario = 6,
    Rollout = 7,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of integer keys.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(base: u64, which: Stream, keys: &[u64]) -> StreamRng {
    let tagged = derive_seed(base, &[which as u64]);
    StreamRng::seed_from_u64(derive_seed(tagged, keys))
}

/// Draws from Normal(mean, std). A non-positive std returns the mean.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, std: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    if std > 0.0 {
        mean + std * z
    } else {
        mean
    }
}

/// Uniform integer in `[lo, hi]`.
#[inline]
pub fn uniform_int<R: Rng + ?Sized>(rng: &mut R, lo: u32, hi: u32) -> u32 {
    rng.random_range(lo..=hi)
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    }
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}
