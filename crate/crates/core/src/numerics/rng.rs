/// Seeded pseudo-random stream with platform-independent output.
///
/// SplitMix64 over a 64-bit counter: the state is `(seed, counter)`, every
/// draw advances the counter by one, and the same seed reproduces the same
/// sequence bit-for-bit. Parallel workers must not share a stream; they
/// derive independent child streams with [`RandomStream::child`].
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    counter: u64,
    /// Spare normal deviate from the last Box-Muller pair.
    cached_normal: Option<f64>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed, counter: 0, cached_normal: None }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deterministic child stream for worker `index`.
    pub fn child(&self, index: u64) -> RandomStream {
        let mixed = splitmix64(self.seed ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA)));
        RandomStream::new(mixed)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = splitmix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in [0, 1): 53 mantissa bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via the Box-Muller polar method.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.cached_normal.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.cached_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Uniform integer in [0, n) by rejection (no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range");
        let span = (hi - lo) as u64 + 1;
        lo + self.below(span) as i64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}
