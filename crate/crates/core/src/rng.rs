//! Seeded, platform-independent random numbers.
//!
//! The generator is ChaCha8 keyed by a 64-bit seed. Independent streams
//! are addressed by a text label (hashed with 64-bit FNV-1a into the ChaCha
//! stream id) and an optional slot index; slot `k` of a stream starts at
//! word position `k · 2⁴⁰`, so slots never overlap in practice. Normal
//! variates use the Box–Muller transform on 53-bit uniforms.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{domain_err, Result};
use crate::tensor::Tensor;

const SLOT_WORDS: u128 = 1 << 40;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::positioned(seed, 0, 0)
    }

    fn positioned(seed: u64, stream: u64, slot: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(u128::from(slot) * SLOT_WORDS);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh generator on the stream named `label`, same seed.
    pub fn split(&self, label: &str) -> Self {
        Self::positioned(self.seed, fnv1a(label), 0)
    }

    /// Fresh generator on slot `index` of the stream named `label`.
    pub fn split_indexed(&self, label: &str, index: u64) -> Self {
        Self::positioned(self.seed, fnv1a(label), index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-and-reject).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Standard normal pair from one Box–Muller transform.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // 1 - U lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// Fills `out` with i.i.d. N(mean, std²) draws, two per transform.
    pub fn fill_normal(&mut self, out: &mut [f64], mean: f64, std: f64) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = self.normal_pair();
            pair[0] = mean + std * a;
            pair[1] = mean + std * b;
        }
        if let [last] = chunks.into_remainder() {
            *last = mean + std * self.normal_pair().0;
        }
    }
}

/// Tensor of i.i.d. normal draws; advances `rng`.
pub fn gaussian(rng: &mut RngState, shape: &[usize], mean: f64, std: f64) -> Result<Tensor> {
    if !(std >= 0.0) {
        return domain_err(format!("standard deviation must be non-negative, got {std}"));
    }
    let mut t = Tensor::zeros(shape);
    rng.fill_normal(t.data_mut(), mean, std);
    Ok(t)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
