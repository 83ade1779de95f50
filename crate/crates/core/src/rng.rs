//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream_id, counter)`, so a stream
//! is checkpointed by storing three integers and independent sub-streams are
//! obtained by choosing a different `stream_id`.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RngState {
    seed: u64,
    stream_id: u64,
    counter: u64,
}

/// A deterministic, splittable random stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RngState", into = "RngState")]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    key: u64,
}

impl From<RngState> for RngStream {
    fn from(s: RngState) -> Self {
        let mut stream = RngStream::new(s.seed, s.stream_id);
        stream.counter = s.counter;
        stream
    }
}

impl From<RngStream> for RngState {
    fn from(s: RngStream) -> Self {
        RngState {
            seed: s.seed,
            stream_id: s.stream_id,
            counter: s.counter,
        }
    }
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(seed ^ mix64(stream_id ^ STREAM_SALT));
        Self {
            seed,
            stream_id,
            counter: 0,
            key,
        }
    }

    /// A fresh stream sharing this stream's seed.
    pub fn substream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        let out = mix64(
            self.key
                .wrapping_add(mix64(self.counter.wrapping_mul(GOLDEN))),
        );
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision. Advances the counter by one.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() on an empty range");
        // Lemire's multiply-shift; the bias is below 2^-40 for any n we use.
        ((self.next_raw() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal draw (Box-Muller, two uniforms per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_uniform() < p
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
