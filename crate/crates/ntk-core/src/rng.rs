//! Seeded, platform-independent random sources.
//!
//! Each execution strand owns one [`Rng`]; derived seeds from [`mix`] give
//! independent streams for sub-tasks (banks, datasets, test sets, Monte-Carlo
//! chunks) so outputs do not depend on scheduling or strand count.

use crate::fm;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 step, used for seeding and seed derivation.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a tag.
#[inline]
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(GOLDEN);
    splitmix64(&mut s)
}

/// Xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    /// Cached second Box-Muller deviate.
    spare: Option<f64>,
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for w in s.iter_mut() {
            *w = splitmix64(&mut sm);
        }
        // All-zero state is invalid for xoshiro.
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        Rng { s, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sign in {-1.0, +1.0}.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal deviate (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u in (0, 1] so the log is finite.
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        let r = fm::sqrt(-2.0 * fm::ln(u));
        let theta = 2.0 * core::f64::consts::PI * v;
        self.spare = Some(r * fm::sin(theta));
        r * fm::cos(theta)
    }
}

/// Splits `total` Monte-Carlo draws into fixed-size chunks with derived seeds.
///
/// Summing per-chunk partials in chunk order gives the same result whether the
/// chunks ran serially or in parallel.
pub fn mc_chunks(seed: u64, total: usize, chunk: usize) -> impl Iterator<Item = (u64, usize)> {
    let chunk = chunk.max(1);
    let n_chunks = total.div_ceil(chunk);
    (0..n_chunks).map(move |c| {
        let len = if (c + 1) * chunk <= total {
            chunk
        } else {
            total - c * chunk
        };
        (mix(seed, c as u64), len)
    })
}
