//! Goodness-of-fit checks for the posterior samplers.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::posteriors::{
    gaussian_sample_mu, uniform_sample_sigma, uniform_sigma_cdf, GaussianPosteriorParams,
    UniformPosteriorParams,
};
use crate::seed::SeedSpec;

/// One-sample Kolmogorov-Smirnov distance `sup |F_n(x) - F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 5% critical value of the one-sample KS distance.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            passed: statistic < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SamplerReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const SCALE_CHECK_SHAPES: [f64; 3] = [1.0, 2.0, 5.0];

/// Inverse-transform scale draws (`sigma_hat = 1`) for each shape in
/// [`SCALE_CHECK_SHAPES`] against the closed-form CDF, then moment, symmetry
/// and median checks of the Student-t sampler. Tolerances scale as `1/sqrt(N)`.
pub fn check_samplers(samples: usize, seed: u64) -> Result<SamplerReport> {
    let n = samples.max(2);
    let root_n = (n as f64).sqrt();
    let mut checks = Vec::new();
    let mut stream = 0u64;
    let mut next_rng = || {
        stream += 1;
        SeedSpec::new(seed, stream).rng()
    };

    for &n_k in &SCALE_CHECK_SHAPES {
        let params = UniformPosteriorParams::new(0.0, 1.0, n_k)?;
        let mut rng = next_rng();
        let draws = (0..n)
            .map(|_| uniform_sample_sigma(rng.sample(Open01), &params))
            .collect::<Result<Vec<f64>>>()?;
        let d = ks_statistic(&draws, |s| uniform_sigma_cdf(s, &params).unwrap_or(f64::NAN));
        checks.push(Check::below(format!("uniform-sigma KS n_k={n_k}"), d, ks_critical_5pct(n)));
    }

    let t5 = GaussianPosteriorParams::new(0.0, 1.0, 5.0)?;
    let mut rng = next_rng();
    let draws = (0..n)
        .map(|_| gaussian_sample_mu(&mut rng, &t5))
        .collect::<Result<Vec<f64>>>()?;
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let target = 5.0 / 3.0;
    checks.push(Check::below(
        "t df=5 variance rel. error",
        (var - target).abs() / target,
        0.05 * (1e5 / n as f64).sqrt().max(1.0),
    ));
    let above = draws.iter().filter(|&&x| x >= 0.0).count() as f64 / n as f64;
    checks.push(Check::below(
        "t df=5 P(x >= loc) - 1/2",
        (above - 0.5).abs(),
        3.0 * 0.5 / root_n,
    ));

    let cauchy = GaussianPosteriorParams::new(0.0, 1.0, 1.0)?;
    let mut rng = next_rng();
    let mut draws = (0..n)
        .map(|_| gaussian_sample_mu(&mut rng, &cauchy))
        .collect::<Result<Vec<f64>>>()?;
    draws.sort_unstable_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        draws[n / 2]
    } else {
        0.5 * (draws[n / 2 - 1] + draws[n / 2])
    };
    checks.push(Check::below(
        "t df=1 |median - loc|",
        median.abs(),
        3.0 * (PI / 2.0) / root_n,
    ));

    Ok(SamplerReport {
        samples: n,
        seed,
        checks,
    })
}
