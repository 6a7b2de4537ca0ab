//! Reward generation and streaming sufficient statistics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{BanditInstance, Model};

/// Support endpoints `(a, b) = (mu - sigma/2, mu + sigma/2)` of a uniform arm.
pub fn uniform_ab_from_ls(mu: f64, sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "uniform width must be > 0, got {sigma}"
        )));
    }
    Ok((mu - 0.5 * sigma, mu + 0.5 * sigma))
}

/// Inverse of [`uniform_ab_from_ls`].
pub fn uniform_ls_from_ab(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "uniform support needs a < b, got a = {a}, b = {b}"
        )));
    }
    Ok((0.5 * (a + b), b - a))
}

/// Draws one reward from arm `arm_index`.
///
/// Panics if `arm_index` is out of range.
pub fn sample_reward<R: Rng + ?Sized>(instance: &BanditInstance, arm_index: usize, rng: &mut R) -> f64 {
    let arm = instance.arm(arm_index);
    match instance.model() {
        Model::Uniform => {
            let u: f64 = rng.random();
            // u in [0, 1), so the draw stays inside [a, b]
            let x = arm.mu + (u - 0.5) * arm.sigma;
            x.clamp(arm.mu - 0.5 * arm.sigma, arm.mu + 0.5 * arm.sigma)
        }
        Model::Gaussian => {
            let z: f64 = rng.sample(StandardNormal);
            arm.mu + arm.sigma * z
        }
    }
}

/// Order statistics `(x_(1), x_(n))` of a uniform arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformStats {
    pub n: u64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for UniformStats {
    fn default() -> Self {
        Self::new()
    }
}

impl UniformStats {
    pub const fn new() -> Self {
        Self {
            n: 0,
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
        }
    }

    pub fn update(&mut self, x: f64) {
        self.n += 1;
        self.x_min = self.x_min.min(x);
        self.x_max = self.x_max.max(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
        }
    }

    pub fn mle_mu(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    pub fn mle_sigma(&self) -> f64 {
        self.x_max - self.x_min
    }
}

pub fn update_uniform_stats(stats: UniformStats, x: f64) -> UniformStats {
    let mut next = stats;
    next.update(x);
    next
}

/// Running mean and centered sum of squares of a Gaussian arm (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub n: u64,
    pub mean: f64,
    pub css: f64,
}

impl GaussianStats {
    pub const fn new() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            css: 0.0,
        }
    }

    pub fn update(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.css += delta * (x - self.mean);
    }

    /// `sqrt(css / n)`; zero before the first observation.
    pub fn mle_sigma(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.css / self.n as f64).sqrt()
        }
    }
}

pub fn update_gaussian_stats(stats: GaussianStats, x: f64) -> GaussianStats {
    let mut next = stats;
    next.update(x);
    next
}

/// Sufficient statistics of one arm, tagged by model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArmStats {
    Uniform(UniformStats),
    Gaussian(GaussianStats),
}

impl ArmStats {
    pub fn empty(model: Model) -> Self {
        match model {
            Model::Uniform => ArmStats::Uniform(UniformStats::new()),
            Model::Gaussian => ArmStats::Gaussian(GaussianStats::new()),
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            ArmStats::Uniform(s) => s.n,
            ArmStats::Gaussian(s) => s.n,
        }
    }

    pub fn update(&mut self, x: f64) {
        match self {
            ArmStats::Uniform(s) => s.update(x),
            ArmStats::Gaussian(s) => s.update(x),
        }
    }

    /// Maximum-likelihood location estimate.
    pub fn mle_mu(&self) -> f64 {
        match self {
            ArmStats::Uniform(s) => s.mle_mu(),
            ArmStats::Gaussian(s) => s.mean,
        }
    }

    /// Maximum-likelihood scale estimate.
    pub fn mle_sigma(&self) -> f64 {
        match self {
            ArmStats::Uniform(s) => s.mle_sigma(),
            ArmStats::Gaussian(s) => s.mle_sigma(),
        }
    }
}
