//! Counter-based random streams.
//!
//! A stream is a 64-bit key; the `i`-th output is a pure function of
//! `(key, i)`, so any sample can be regenerated without replaying the ones
//! before it and concurrent workers never share state. Keys for sub-streams
//! are derived by hashing a parent key with a label.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream key from a parent key and a label.
pub fn derive_key(parent: u64, label: u64) -> u64 {
    mix64(
        mix64(parent ^ 0x5851_f42d_4c95_7f2d).wrapping_add(label.wrapping_mul(GOLDEN_GAMMA))
            ^ label,
    )
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self {
            key: mix64(key),
            counter: 0,
        }
    }

    /// The `index`-th output of this stream.
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform on the open interval `(0, 1)`, 53 bits of resolution.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normals (Box–Muller).
    #[inline]
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let radius = (-2.0 * self.next_open01().ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * self.next_open01()).sin_cos();
        (radius * c, radius * s)
    }
}
