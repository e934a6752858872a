//! Seeded random draws used by the sampled experiments.
//!
//! ChaCha8 keeps streams identical across platforms, so every sampled report
//! is reproducible from its seed.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct NormalSampler {
    rng: ChaCha8Rng,
}

impl NormalSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Independent normals scaled by `1/(1 + lambda_j)`.
    pub fn scaled_coefficients(&mut self, lambdas: &[f64]) -> Vec<f64> {
        lambdas.iter().map(|l| self.normal() / (1.0 + l)).collect()
    }

    /// A uniformly distributed point on the unit sphere of dimension `n`.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.normal()).collect();
            let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
