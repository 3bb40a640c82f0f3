//! SplitMix64 pseudo-random generator.
//!
//! Every random draw in the crate (synthetic trials, weight init, epoch
//! shuffles) comes from this generator so that fixtures are reproducible
//! across platforms and languages. The state update and output mix are the
//! published SplitMix64 constants:
//!
//! ```text
//! state  += 0x9E37_79B9_7F4A_7C15
//! z       = state
//! z       = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//! z       = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//! output  = z ^ (z >> 31)
//! ```
//!
//! Uniform doubles take the top 53 bits; normals use Box-Muller (cosine
//! branch only, one normal per two uniforms).

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream from a base seed and a list of stream
    /// labels, by folding each label through the output mix.
    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let mut state = mix(seed);
        for &label in labels {
            state = mix(state ^ mix(label.wrapping_add(GOLDEN_GAMMA)));
        }
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform index in [0, n) by multiply-shift (Lemire, without rejection).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle, iterating from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
