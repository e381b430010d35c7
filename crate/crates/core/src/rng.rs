//! Seeded random streams.
//!
//! Every stream is identified by a master seed and a label path. The pair is
//! folded into a single 64-bit seed with a SplitMix64 avalanche, which then
//! seeds a xoshiro256++ generator. Parallel tasks never share a stream; each
//! derives its own child.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn avalanche(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a label path into a master seed. Order of labels matters.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(avalanche(master), |h, &label| {
        avalanche(h ^ avalanche(label))
    })
}

#[derive(Clone, Debug)]
pub struct RngStream {
    rng: Xoshiro256PlusPlus,
    master_seed: u64,
    labels: Vec<u64>,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, labels: &[u64]) -> Self {
        let rng = Xoshiro256PlusPlus::seed_from_u64(derive_seed(master_seed, labels));
        Self {
            rng,
            master_seed,
            labels: labels.to_vec(),
            spare_normal: None,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, &[])
    }

    /// A fresh stream whose label path extends this one's by `label`.
    pub fn child(&self, label: u64) -> Self {
        let mut labels = self.labels.clone();
        labels.push(label);
        Self::new(self.master_seed, &labels)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1].
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal via the Box–Muller transform; the second variate of
    /// each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Exponential with unit rate.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open0().ln()
    }

    /// Uniform index in `0..len` (`len > 0`), by rejection to avoid modulo bias.
    pub fn index(&mut self, len: usize) -> usize {
        let len = len as u64;
        let zone = u64::MAX - (u64::MAX % len);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % len) as usize;
            }
        }
    }
}
