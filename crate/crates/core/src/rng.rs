//! Counter-based random number generation.
//!
//! Every draw is a pure function of `(seed, stream, counter)` through a
//! splitmix64-style mixer, so per-trajectory streams are independent,
//! reproducible, and safe to evaluate in parallel in any order. No state is
//! shared between streams and results do not depend on thread scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: a bijective avalanche mix of a 64-bit word.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed counter hash: chained mixes of the seed, stream index, and counter.
#[inline]
pub fn hash3(seed: u64, stream: u64, counter: u64) -> u64 {
    mix(mix(mix(seed) ^ stream) ^ counter)
}

/// A small counter-based RNG bound to one `(seed, stream)` pair.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: mix(mix(seed) ^ stream),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = mix(self.key ^ self.counter);
        self.counter = self.counter.wrapping_add(1);
        x
    }

    /// Uniform draw on (0, 1]; never returns 0, so `ln` is always finite.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal pair via the Box-Muller transform.
    #[inline]
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let ang = 2.0 * std::f64::consts::PI * u2;
        (mag * ang.cos(), mag * ang.sin())
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }
}
