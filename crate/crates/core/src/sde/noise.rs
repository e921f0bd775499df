//! Reproducible Gaussian increments, one independent stream per trajectory.
//!
//! A stream is identified by `(master seed, trajectory index)`. Each index owns
//! two ChaCha8 streams: one for Wiener increments and an auxiliary one for the
//! uniforms used by crossing detection, so auxiliary draws never shift the
//! increment sequence shared between strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Increments,
    Auxiliary,
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self::with_channel(seed, index, Channel::Increments)
    }

    pub fn with_channel(seed: u64, index: u64, channel: Channel) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lane = match channel {
            Channel::Increments => 0,
            Channel::Auxiliary => 1,
        };
        rng.set_stream(index.wrapping_mul(2).wrapping_add(lane));
        NoiseStream { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `dW ~ N(0, dt)`.
    pub fn increment(&mut self, dt: f64) -> f64 {
        dt.sqrt() * self.standard_normal()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// A sampled Wiener path stored as increments on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl BrownianPath {
    pub fn sample(stream: &mut NoiseStream, dt: f64, steps: usize) -> Self {
        let increments = (0..steps).map(|_| stream.increment(dt)).collect();
        BrownianPath { dt, increments }
    }

    /// Sums consecutive groups of `factor` increments, giving the same path
    /// observed on a grid `factor` times coarser. A trailing partial group is
    /// dropped.
    pub fn coarsen(&self, factor: usize) -> BrownianPath {
        assert!(factor >= 1, "coarsening factor must be positive");
        BrownianPath {
            dt: self.dt * factor as f64,
            increments: self
                .increments
                .chunks_exact(factor)
                .map(|c| c.iter().sum())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}
