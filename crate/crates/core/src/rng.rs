//! Counter-based deterministic random values: every draw is a pure function
//! of (seed, stream, counter), so scenario outputs do not depend on call
//! order or worker count. The mixer is SplitMix64.

#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64, stream: &str) -> Self {
        let mut h = 0xcbf29ce484222325u64;
        for b in stream.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        Self { seed, stream: h }
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(counter)))
    }

    /// Uniform in [0, 1).
    pub fn unit_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_at(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit_at(counter)
    }
}
