//! Seedable, splittable randomness.
//!
//! Every ensemble member draws from its own stream of a counter-based
//! generator, so runs are reproducible independently of scheduling and of
//! how many other runs execute concurrently.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One independent random stream, addressed by `(master_seed, stream_index)`.
///
/// Identical coordinates replay the identical draw sequence; distinct stream
/// indices are statistically independent. Cloning preserves position.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        RngStream { master_seed, stream_index, inner }
    }

    /// A fresh stream under the same master seed.
    pub fn fork(&self, stream_index: u64) -> Self {
        RngStream::new(self.master_seed, stream_index)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform column index in `0..n`.
    pub fn column(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Uniform in `[lo, hi)`. A degenerate range returns `lo` without
    /// consuming randomness, so point-mass parameters stay valid.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return lo;
        }
        self.inner.gen_range(lo..hi)
    }

    /// Fair coin.
    pub fn flip(&mut self) -> bool {
        self.inner.gen::<bool>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
