//! Deterministic random stream shared by the simulator and the samplers.
//!
//! The generator is SplitMix64 (64-bit state). Bounded draws and shuffles are
//! implemented here rather than delegated to `rand` so that a given seed maps
//! to the same permutation sequence on every platform and crate version.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub const ALGORITHM: &str = "splitmix64";

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: SplitMix64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Stream for Monte Carlo trial `trial` under `base_seed`.
    pub fn for_trial(base_seed: u64, trial: u64) -> Self {
        Self::new(base_seed ^ trial)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound` (Lemire's widening multiply with
    /// rejection, so the result is unbiased).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, len: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..len).collect();
        self.shuffle(&mut p);
        p
    }
}
