//! Keyed random streams.
//!
//! Every random quantity in a run is drawn from a stream addressed by
//! `(master seed, replicate, particle, purpose, sub)`. Streams are ChaCha8
//! keystreams whose 256-bit key is derived from the address, so two runs
//! that share an address see identical randomness no matter which other
//! parameters differ. Couplings across `alpha`, `rho` and `lambda` rely on
//! this. [`StreamFactory::uniform_at`] gives random access to single
//! uniforms, used where the order of draws would otherwise depend on
//! control flow (bridge crossings, per-step infection trials).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one well-mixed 64-bit value.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut h = 0x2545_F491_4F6C_DD1D_u64;
    for &w in words {
        h = mix64(h ^ mix64(w.wrapping_add(GOLDEN)));
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Purpose {
    PointProcess,
    Path,
    Lifetime,
    Thinning,
    /// Brownian-bridge crossing uniforms.
    Bridge,
    /// Hit-or-miss sample points for volume integrals.
    Sampling,
    /// Midpoints inserted when a path is refined to half its step.
    Refinement,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::PointProcess => 1,
            Purpose::Path => 2,
            Purpose::Lifetime => 3,
            Purpose::Thinning => 4,
            Purpose::Bridge => 5,
            Purpose::Sampling => 6,
            Purpose::Refinement => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamKey {
    pub replicate: u64,
    pub particle: u64,
    pub purpose: Purpose,
    /// Secondary index, e.g. the target of a pairwise contact stream.
    pub sub: u64,
}

impl RngStreamKey {
    pub fn new(replicate: u64, particle: u64, purpose: Purpose) -> Self {
        Self {
            replicate,
            particle,
            purpose,
            sub: 0,
        }
    }

    pub fn with_sub(self, sub: u64) -> Self {
        Self { sub, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// A factory for an independent experiment sharing the same master seed.
    pub fn fork(&self, label: u64) -> Self {
        Self {
            master_seed: hash_words(&[self.master_seed, label, 0xF0_4C]),
        }
    }

    fn key_words(&self, key: &RngStreamKey) -> [u64; 4] {
        let base = [
            self.master_seed,
            key.replicate,
            key.particle,
            key.purpose.tag(),
            key.sub,
        ];
        let h = hash_words(&base);
        [
            mix64(h ^ 0x1),
            mix64(h.wrapping_add(GOLDEN)),
            mix64(h ^ 0xDEAD_BEEF_CAFE_F00D),
            mix64(h.rotate_left(17) ^ self.master_seed),
        ]
    }

    pub fn stream(&self, key: RngStreamKey) -> Stream {
        let words = self.key_words(&key);
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// Uniform on [0, 1) at position `counter` of the stream `key`.
    pub fn uniform_at(&self, key: RngStreamKey, counter: u64) -> f64 {
        let w = self.key_words(&key);
        uniform_from_words(w[0], w[1], counter)
    }

    /// Cheap handle for repeated random access into one keyed stream.
    pub fn random_access(&self, key: RngStreamKey) -> RandomAccess {
        let w = self.key_words(&key);
        RandomAccess { a: w[0], b: w[1] }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomAccess {
    a: u64,
    b: u64,
}

impl RandomAccess {
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        uniform_from_words(self.a, self.b, counter)
    }
}

#[inline]
fn uniform_from_words(a: u64, b: u64, counter: u64) -> f64 {
    let z = mix64(a ^ mix64(counter.wrapping_mul(GOLDEN).wrapping_add(b)));
    let z = mix64(z ^ b);
    (z >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_reproduces_stream() {
        let f = StreamFactory::new(42);
        let key = RngStreamKey::new(3, 9, Purpose::Path);
        let a: Vec<u64> = f.stream(key).random_iter().take(16).collect();
        let b: Vec<u64> = f.stream(key).random_iter().take(16).collect();
        assert_eq!(a, b);
        assert_eq!(f.uniform_at(key, 77), f.uniform_at(key, 77));
    }

    #[test]
    fn keys_differ_in_every_field() {
        let f = StreamFactory::new(1);
        let base = RngStreamKey::new(0, 0, Purpose::Path);
        let variants = [
            RngStreamKey { replicate: 1, ..base },
            RngStreamKey { particle: 1, ..base },
            RngStreamKey {
                purpose: Purpose::Lifetime,
                ..base
            },
            base.with_sub(1),
        ];
        let first: u64 = f.stream(base).random();
        for k in variants {
            let v: u64 = f.stream(k).random();
            assert_ne!(first, v);
        }
        let other: u64 = StreamFactory::new(2).stream(base).random();
        assert_ne!(first, other);
    }

    #[test]
    fn streams_are_uncorrelated() {
        // |r| < 4/sqrt(n) over paired draws from neighbouring keys.
        let f = StreamFactory::new(2024);
        let n = 100_000;
        let mut a = f.stream(RngStreamKey::new(0, 1, Purpose::Path));
        let mut b = f.stream(RngStreamKey::new(0, 2, Purpose::Path));
        let ra = f.random_access(RngStreamKey::new(0, 1, Purpose::Bridge));
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut tx, mut txx, mut txy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x: f64 = a.random();
            let y: f64 = b.random();
            let z = ra.uniform(i as u64);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            tx += z;
            txx += z * z;
            txy += z * x;
        }
        let nf = n as f64;
        let corr = |sx: f64, sy: f64, sxx: f64, syy: f64, sxy: f64| {
            let cov = sxy / nf - sx * sy / nf / nf;
            let vx = sxx / nf - (sx / nf).powi(2);
            let vy = syy / nf - (sy / nf).powi(2);
            cov / (vx * vy).sqrt()
        };
        let bound = 4.0 / nf.sqrt();
        assert!(corr(sx, sy, sxx, syy, sxy).abs() < bound);
        assert!(corr(tx, sx, txx, sxx, txy).abs() < bound);
        assert!((tx / nf - 0.5).abs() < 4.0 * (1.0 / 12.0f64 / nf).sqrt());
    }

    #[test]
    fn random_access_matches_uniform_at() {
        let f = StreamFactory::new(5);
        let key = RngStreamKey::new(1, 2, Purpose::Bridge).with_sub(7);
        let ra = f.random_access(key);
        for c in [0u64, 1, 99, u64::MAX] {
            assert_eq!(ra.uniform(c), f.uniform_at(key, c));
            assert!((0.0..1.0).contains(&ra.uniform(c)));
        }
    }
}
