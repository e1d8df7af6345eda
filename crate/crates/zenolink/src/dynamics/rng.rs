//! Counter-based random numbers for reproducible parallel sweeps.
//!
//! Every draw is a pure function of `(seed, id0, id1, id2, id3)`; there is
//! no mutable stream state. Trajectory ensembles key their Wiener
//! increments by `(trajectory, channel, step, kind)`, so results are
//! bitwise identical for any worker count and scheduling order.
//!
//! The generator absorbs the id words into a 64-bit state with odd-constant
//! multiplies and finishes with the SplitMix64 finalizer; statistical
//! quality is ample for Monte Carlo averaging.

/// Stateless, seedable counter RNG.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

/// Draw-kind ids, fourth counter word.
pub mod kind {
    pub const WIENER: u64 = 0;
    pub const OU_INIT: u64 = 1;
    pub const OU_STEP: u64 = 2;
    pub const GENERIC: u64 = 7;
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    let x = (state ^ word.wrapping_mul(0x9e3779b97f4a7c15)).wrapping_mul(0xff51afd7ed558ccd);
    x ^ (x >> 33)
}

#[inline]
fn finalize(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw 64-bit draw for the given counter tuple.
    #[inline]
    pub fn bits(&self, ids: [u64; 4], sub: u64) -> u64 {
        let mut h = self.seed ^ 0x6a09e667f3bcc909;
        for w in ids {
            h = absorb(h, w);
        }
        finalize(absorb(h, sub))
    }

    /// Uniform draw in `(0, 1]`.
    #[inline]
    pub fn uniform(&self, ids: [u64; 4], sub: u64) -> f64 {
        ((self.bits(ids, sub) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller (cosine branch).
    #[inline]
    pub fn normal(&self, ids: [u64; 4]) -> f64 {
        let u1 = self.uniform(ids, 0);
        let u2 = self.uniform(ids, 1);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
