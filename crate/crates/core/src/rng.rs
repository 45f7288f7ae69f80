//! Portable, explicitly seeded randomness.
//!
//! Every stochastic operation in the crate draws from a [`DetRng`], which is
//! xoshiro256** seeded through SplitMix64. The derived draws are fixed here
//! rather than delegated to a sampling library so the streams can be
//! reproduced bit-for-bit from any language:
//!
//! * `uniform`: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * `below(n)`: Lemire's widening-multiply method with rejection.
//! * `standard_normal`: Box-Muller, cosine branch only, one normal per two
//!   uniforms (`u1` is mapped to `(0, 1]` as `1 - uniform`).
//! * `shuffle`: Fisher-Yates from the last element down.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Clone)]
pub struct DetRng {
    inner: Xoshiro256StarStar,
}

impl DetRng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "DetRng::below called with n = 0");
        let n = n as u64;
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as usize
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[inline]
fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a cell seed from a master seed and a list of names.
///
/// FNV-1a (64-bit) runs over the UTF-8 bytes of each part, with a `0xFF`
/// byte after every part; the hash is XORed into `master` and passed
/// through the SplitMix64 finalizer.
pub fn mix_seed(master: u64, parts: &[&str]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = FNV_OFFSET;
    for part in parts {
        for &byte in part.as_bytes().iter().chain(std::iter::once(&0xFF)) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64_finalize(master ^ hash)
}
