//! Portable random number generation.
//!
//! Every stochastic step in the harness draws from [`Rng64`], a ChaCha8
//! stream cipher generator (`rand_chacha::ChaCha8Rng`) whose output is
//! fixed by its algorithm and independent of platform and endianness.
//! Derived quantities are computed with explicitly documented transforms
//! so another implementation can reproduce the same numbers:
//!
//! * `uniform01`: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * `normal`: Box–Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)` using two
//!   fresh `uniform01` draws per call (the sine branch is discarded).
//! * `below(n)`: rejection sampling on `next_u64` against the largest
//!   multiple of `n` that fits in 64 bits.
//!
//! Seeds for sub-streams come from [`derive_seed`], the first eight
//! bytes (little endian) of SHA-256 over a tagged byte encoding.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct Rng64 {
    inner: ChaCha8Rng,
}

impl Rng64 {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Standard normal scaled by `std` and shifted by `mean`.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let u1 = self.uniform01();
        let u2 = self.uniform01();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        mean + std * r * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal_vec(&mut self, mean: f64, std: f64, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal(mean, std)).collect()
    }

    /// Uniform integer in `[0, n)`. Panics when `n == 0`.
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

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }
}

/// Component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    U64(u64),
    Str(&'a str),
}

impl From<u64> for SeedPart<'_> {
    fn from(v: u64) -> Self {
        SeedPart::U64(v)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(v: usize) -> Self {
        SeedPart::U64(v as u64)
    }
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(v: &'a str) -> Self {
        SeedPart::Str(v)
    }
}

/// Stable seed for a sub-stream identified by `parts`.
pub fn derive_seed(parts: &[SeedPart<'_>]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        match p {
            SeedPart::U64(v) => {
                h.update([0u8]);
                h.update(v.to_le_bytes());
            }
            SeedPart::Str(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[macro_export]
macro_rules! seed {
    ($($part:expr),+ $(,)?) => {
        $crate::rng::derive_seed(&[$($crate::rng::SeedPart::from($part)),+])
    };
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
