//! Deterministic random numbers with O(1) random access.
//!
//! Every stochastic quantity in this crate descends from [`CounterRng`],
//! a splitmix64 generator addressed by counter instead of advanced by
//! mutation.  `bits(n)` returns exactly the n-th output of the sequential
//! splitmix64 stream for the same seed, so draws can be produced in any
//! order (or in parallel) without changing their values.
//!
//! Stream splitting: [`CounterRng::substream`] derives an independent
//! child seed by remixing.  The convention used throughout the crate is
//! one split level per ensemble member (`substream(realization)`) and a
//! second level for distinct roles inside a member (for example the
//! i.i.d. mass draws versus the transparency noise).  Lattice sites are
//! addressed through [`CounterRng::site_counter`], a zig-zag interleave of
//! the signed index, so the draw attached to site `j` does not depend on
//! the truncation half-width.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SPLIT_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// splitmix64 output mixer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seedable counter-based generator (random-access splitmix64).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for ensemble member / role `id`.
    pub fn substream(&self, id: u64) -> Self {
        Self {
            seed: mix(self.seed ^ mix(id.wrapping_mul(GOLDEN).wrapping_add(SPLIT_SALT))),
        }
    }

    /// The `counter`-th raw draw of this stream.
    pub fn bits(&self, counter: u64) -> u64 {
        mix(self
            .seed
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn unit_f64(&self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in `[-a, a)`.
    pub fn symmetric_f64(&self, counter: u64, a: f64) -> f64 {
        a * (2.0 * self.unit_f64(counter) - 1.0)
    }

    /// Counter for a signed lattice index (zig-zag interleave), so that
    /// negative and positive sites map to disjoint counters.
    pub fn site_counter(j: i64) -> u64 {
        ((j << 1) ^ (j >> 63)) as u64
    }
}
