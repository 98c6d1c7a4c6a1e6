//! Deterministic counter-based random number generation.
//!
//! The generator is a SplitMix64-style counter design: draw `i` of a stream
//! seeded with `s` is `mix64(s .wrapping_add. (i+1) * GOLDEN)` where `mix64`
//! is the SplitMix64 finalizer (Steele et al., "Fast splittable pseudorandom
//! number generators"). Output is a pure function of `(seed, counter)`, uses
//! only integer ops, and is therefore bit-identical on every platform.
//!
//! Parallel code never shares a generator; it derives an independent child
//! stream per work item with [`SeededRng::derive`], which makes results
//! independent of scheduling order.

use alloc::vec::Vec;

use crate::fm;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based deterministic RNG. Identical seeds produce identical
/// sequences on every platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    counter: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed, counter: 0 }
    }

    /// Seed of this stream (not its current position).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws made so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Derives an independent child stream. The child seed depends only on
    /// `(seed, stream)`, never on the parent's position, so fan-out is
    /// order-independent.
    pub fn derive(&self, stream: u64) -> SeededRng {
        SeededRng::new(mix64(self.seed ^ mix64(stream.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via widening multiply. The modulo bias is
    /// at most `n / 2^64`, far below anything observable here.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Standard normal draw (Box-Muller).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        fm::sqrt(-2.0 * fm::ln(u1)) * fm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Uniform sample of `k` distinct indices from `0..n`, in selection
    /// order, by partial Fisher-Yates. Requires `k <= n`.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
