//! Seeded generators for generic parameters and evaluation points.

use crate::gr_poly::AlphaParams;
use crate::qcore::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, hi: usize) -> usize {
        self.rng.gen_range(0..hi)
    }

    /// exp(s u + i phi) with u uniform in [-1, 1] and phi uniform.
    pub fn polar(&mut self, spread: f64) -> C64 {
        let r = (spread * self.uniform(-1.0, 1.0)).exp();
        C64::from_polar(r, self.uniform(0.0, TAU))
    }

    pub fn unit(&mut self) -> C64 {
        self.polar(0.3)
    }

    pub fn complex(&mut self, scale: f64) -> C64 {
        C64::new(self.uniform(-scale, scale), self.uniform(-scale, scale))
    }

    /// Generic complex alphas.
    pub fn alphas(&mut self, n: usize, q: C64) -> AlphaParams {
        let a = (0..n + 3).map(|_| self.polar(0.3)).collect();
        AlphaParams::new(a, q).expect("sampled alphas are nonzero")
    }

    /// Alphas close to the unit circle; keeps deep operator compositions well conditioned.
    pub fn alphas_near_unit(&mut self, n: usize, q: C64) -> AlphaParams {
        let a = (0..n + 3).map(|_| self.polar(0.1)).collect();
        AlphaParams::new(a, q).expect("sampled alphas are nonzero")
    }

    /// Generic evaluation point.
    pub fn points(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.polar(0.3)).collect()
    }

    /// Points on the unit circle with argument in [lo, hi].
    pub fn arc_points(&mut self, n: usize, lo: f64, hi: f64) -> Vec<C64> {
        (0..n).map(|_| C64::from_polar(1.0, self.uniform(lo, hi))).collect()
    }

    pub fn multi_index(&mut self, n: usize, max_total: usize) -> Vec<usize> {
        let total = self.index(max_total + 1);
        let mut v = vec![0; n];
        for _ in 0..total {
            let j = self.index(n);
            v[j] += 1;
        }
        v
    }
}
