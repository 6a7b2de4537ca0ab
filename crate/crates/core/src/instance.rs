//! Bandit environments: arm parameters, sub-optimality gaps and the
//! built-in instances used for the reference experiments.
//!
//! Instance files are JSON objects of the form
//! `{"model": "uniform"|"gaussian", "arms": [{"mu": f, "sigma": f}, ...]}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward family shared by every arm of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Uniform,
    Gaussian,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Uniform => f.write_str("uniform"),
            Model::Gaussian => f.write_str("gaussian"),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Model::Uniform),
            "gaussian" => Ok(Model::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

/// Location-scale parameters of one arm. For the uniform model `mu` is the
/// midpoint of the support and `sigma` its width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Deserialize)]
struct RawInstance {
    model: Model,
    arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct BanditInstance {
    model: Model,
    arms: Vec<Arm>,
}

impl TryFrom<RawInstance> for BanditInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        BanditInstance::new(raw.model, raw.arms)
    }
}

impl BanditInstance {
    pub fn new(model: Model, arms: Vec<Arm>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 arms, got {}",
                arms.len()
            )));
        }
        for (i, arm) in arms.iter().enumerate() {
            if !arm.mu.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "arm {i}: mu must be finite, got {}",
                    arm.mu
                )));
            }
            if !(arm.sigma > 0.0 && arm.sigma.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "arm {i}: sigma must be finite and > 0, got {}",
                    arm.sigma
                )));
            }
        }
        Ok(Self { model, arms })
    }

    /// Convenience constructor from parallel `mu` / `sigma` slices.
    pub fn from_params(model: Model, mus: &[f64], sigmas: &[f64]) -> Result<Self> {
        if mus.len() != sigmas.len() {
            return Err(Error::InvalidInstance(format!(
                "{} means but {} scales",
                mus.len(),
                sigmas.len()
            )));
        }
        let arms = mus
            .iter()
            .zip(sigmas)
            .map(|(&mu, &sigma)| Arm { mu, sigma })
            .collect();
        Self::new(model, arms)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arm(&self, index: usize) -> &Arm {
        &self.arms[index]
    }

    /// Whether more than one arm attains the best mean.
    pub fn has_tied_optimum(&self) -> bool {
        let best = self.best_mean();
        self.arms.iter().filter(|a| a.mu == best).count() > 1
    }

    pub fn best_mean(&self) -> f64 {
        self.arms
            .iter()
            .map(|a| a.mu)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Six-armed uniform instance with `mu = (5.5, 5.0, 4.5, 4.0, 4.75, 3.0)`
    /// and widths `(4.5, 5.0, 4.5, 4, 3.75, 2.0)`.
    pub fn paper_uniform_6arm() -> Self {
        Self::from_params(
            Model::Uniform,
            &[5.5, 5.0, 4.5, 4.0, 4.75, 3.0],
            &[4.5, 5.0, 4.5, 4.0, 3.75, 2.0],
        )
        .expect("built-in instance is valid")
    }

    /// Six-armed Gaussian instance with `mu = (10, 9, 8, 7, -1, 0)` and
    /// `sigma = (2*sqrt(2), 1, 1, sqrt(0.5), 1, 2)`.
    pub fn paper_gaussian_6arm() -> Self {
        Self::from_params(
            Model::Gaussian,
            &[10.0, 9.0, 8.0, 7.0, -1.0, 0.0],
            &[2.0 * 2f64.sqrt(), 1.0, 1.0, 0.5f64.sqrt(), 1.0, 2.0],
        )
        .expect("built-in instance is valid")
    }

    /// Two uniform arms sharing the left endpoint 0, with right endpoints
    /// `b1 = 1` and `b2 = 0.1`. Used by the Dirac-oracle growth diagnostic.
    pub fn theorem2_pair() -> Self {
        Self::from_params(Model::Uniform, &[0.5, 0.05], &[1.0, 0.1])
            .expect("built-in instance is valid")
    }

    /// Looks up a built-in instance by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "paper-uniform-6arm" => Some(Self::paper_uniform_6arm()),
            "paper-gaussian-6arm" => Some(Self::paper_gaussian_6arm()),
            "theorem2-pair" => Some(Self::theorem2_pair()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 3] =
        ["paper-uniform-6arm", "paper-gaussian-6arm", "theorem2-pair"];
}

/// Sub-optimality gaps `max_j mu_j - mu_i` and the index of a best arm.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub gaps: Vec<f64>,
    pub best_index: usize,
}

impl GapVector {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Gaps against the true best mean. Exact ties resolve to the lowest index.
pub fn gap_vector(instance: &BanditInstance) -> GapVector {
    let mut best_index = 0;
    for (i, arm) in instance.arms().iter().enumerate() {
        if arm.mu > instance.arms()[best_index].mu {
            best_index = i;
        }
    }
    let best = instance.arms()[best_index].mu;
    let gaps = instance.arms().iter().map(|a| best - a.mu).collect();
    GapVector { gaps, best_index }
}
