//! Seeded random streams.
//!
//! Every run derives independent ChaCha8 streams from one 64-bit seed, one
//! per run component, so that adding draws to one component never shifts
//! the draws seen by another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in run manifests.
pub const PRNG_ID: &str = "chacha8 (rand_chacha 0.9, seed_from_u64, one stream per component)";

/// Stream numbers handed to `ChaCha8Rng::set_stream`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    /// Asymmetric-mutation flip coins and painting launch coins.
    Flip = 0,
    /// Start pixels for walk mutations.
    Start = 1,
    /// One uniform variate per walk step.
    Step = 2,
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "empty range");
        self.inner.random_range(0..bound)
    }

    /// Number of failures before the first success of a Bernoulli(`p`) trial
    /// sequence. `ln_q` must be `ln(1 - p)` for `0 < p < 1`.
    pub(crate) fn geometric_gap(&mut self, ln_q: f64) -> u64 {
        // 1 - uniform lies in (0, 1], so the log is finite
        let u = 1.0 - self.uniform();
        let gap = (u.ln() / ln_q).floor();
        if gap >= u64::MAX as f64 {
            u64::MAX
        } else {
            gap as u64
        }
    }
}

/// The three component streams of one run.
#[derive(Clone, Debug)]
pub struct RunStreams {
    pub flip: RngStream,
    pub start: RngStream,
    pub step: RngStream,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            flip: RngStream::new(seed, StreamId::Flip),
            start: RngStream::new(seed, StreamId::Start),
            step: RngStream::new(seed, StreamId::Step),
        }
    }
}
