//! Closed-form posterior samplers under the scale priors `pi(l, sigma) ∝ sigma^(-k)`.
//!
//! Uniform model, after `n` observations with MLEs `mu_hat = (x_(1) + x_(n)) / 2`
//! and `sigma_hat = x_(n) - x_(1)`, and with `n_k = n + k - 2`:
//!
//! ```text
//! p(sigma | data)     = n_k (n_k + 1) sigma_hat^n_k (sigma - sigma_hat) / sigma^(n_k + 2),  sigma >= sigma_hat
//! p(mu | data, sigma) = Uniform(mu_hat - (sigma - sigma_hat)/2, mu_hat + (sigma - sigma_hat)/2)
//! ```
//!
//! so a joint draw is obtained by inverting the scale CDF and then drawing the
//! location uniformly. Gaussian model: the marginal posterior of the mean has
//! density proportional to `(1 + (mu - x_bar)^2 / sigma_hat^2)^(-(n_k + 1) / 2)`
//! with `sigma_hat = sqrt(S / n)`, i.e. `x_bar + sigma_hat / sqrt(n_k) * T` for a
//! standard Student-t variate `T` with `n_k` degrees of freedom.
//!
//! The truncated variants replace the scale estimate by `max(sigma_hat, 1/n)`
//! (uniform) or `sqrt(max(1, S) / n)` (Gaussian) before sampling.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::{GaussianStats, UniformStats};

/// Exponent `k` of the prior `sigma^(-k)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PriorK(f64);

impl PriorK {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "prior exponent must be finite, got {k}"
            )));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Posterior shape `n_k = n + k - 2` after `n` observations.
    pub fn n_k(self, n: u64) -> f64 {
        n as f64 + self.0 - 2.0
    }
}

impl TryFrom<f64> for PriorK {
    type Error = Error;

    fn try_from(k: f64) -> Result<Self> {
        PriorK::new(k)
    }
}

impl From<PriorK> for f64 {
    fn from(k: PriorK) -> f64 {
        k.0
    }
}

impl fmt::Display for PriorK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Named noninformative priors of the location-scale family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedPrior {
    /// Flat in `(mu, sigma)`.
    UniformLS,
    /// `sigma^-1`.
    Reference,
    /// `sigma^-2`.
    Jeffreys,
    /// Flat in `(mu, 1/sigma)`; the Jacobian of `sigma -> 1/sigma` gives `sigma^-2`.
    UniformLocationRate,
}

impl NamedPrior {
    pub fn as_str(self) -> &'static str {
        match self {
            NamedPrior::UniformLS => "uniform-ls",
            NamedPrior::Reference => "reference",
            NamedPrior::Jeffreys => "jeffreys",
            NamedPrior::UniformLocationRate => "uniform-location-rate",
        }
    }
}

impl FromStr for NamedPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-ls" | "uniform" => Ok(NamedPrior::UniformLS),
            "reference" => Ok(NamedPrior::Reference),
            "jeffreys" => Ok(NamedPrior::Jeffreys),
            "uniform-location-rate" => Ok(NamedPrior::UniformLocationRate),
            other => Err(Error::InvalidParameter(format!("unknown prior {other:?}"))),
        }
    }
}

pub fn prior_k_for(name: NamedPrior) -> PriorK {
    let k = match name {
        NamedPrior::UniformLS => 0.0,
        NamedPrior::Reference => 1.0,
        NamedPrior::Jeffreys | NamedPrior::UniformLocationRate => 2.0,
    };
    PriorK(k)
}

/// Scale used by vanilla sampling when all observations of an arm coincide.
pub fn degenerate_scale_floor(mu_hat: f64) -> f64 {
    f64::EPSILON * mu_hat.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPosteriorParams {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub n_k: f64,
}

impl UniformPosteriorParams {
    pub fn new(mu_hat: f64, sigma_hat: f64, n_k: f64) -> Result<Self> {
        let params = Self {
            mu_hat,
            sigma_hat,
            n_k,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n_k > 0.0) || !self.n_k.is_finite() {
            return Err(Error::ImproperPosterior(self.n_k));
        }
        if !(self.sigma_hat >= 0.0) || !self.sigma_hat.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale estimate must be finite and >= 0, got {}",
                self.sigma_hat
            )));
        }
        Ok(())
    }
}

/// Posterior density of the scale, zero below `sigma_hat`.
pub fn uniform_sigma_pdf(sigma: f64, params: &UniformPosteriorParams) -> Result<f64> {
    params.validate()?;
    let sh = params.sigma_hat;
    if sigma <= sh {
        return Ok(0.0);
    }
    let n_k = params.n_k;
    let r = sh / sigma;
    Ok(n_k * (n_k + 1.0) * r.powf(n_k) * (sigma - sh) / (sigma * sigma))
}

/// Posterior CDF of the scale:
/// `1 - (n_k + 1) r^n_k + n_k r^(n_k + 1)` with `r = sigma_hat / sigma`.
pub fn uniform_sigma_cdf(sigma: f64, params: &UniformPosteriorParams) -> Result<f64> {
    params.validate()?;
    if sigma <= params.sigma_hat {
        return Ok(0.0);
    }
    let n_k = params.n_k;
    let r = params.sigma_hat / sigma;
    let survival = r.powf(n_k) * (n_k + 1.0 - n_k * r);
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

const SIGMA_REL_TOL: f64 = 1e-12;
const MAX_ROOT_ITERS: usize = 200;

/// Log-survival of the scale posterior in the coordinate `z = ln(sigma / sigma_hat)`:
/// `ln S(z) = -n_k z + ln(1 + n_k (1 - e^-z))`, together with its derivative.
fn log_survival(z: f64, n_k: f64) -> (f64, f64) {
    let one_minus_r = -(-z).exp_m1();
    let inner = 1.0 + n_k * one_minus_r;
    let value = -n_k * z + (n_k * one_minus_r).ln_1p();
    let slope = -n_k + n_k * (1.0 - one_minus_r) / inner;
    (value, slope)
}

/// Inverse-transform draw of the scale: returns `sigma` with `cdf(sigma) = u`.
///
/// The root is bracketed (upper end grown geometrically from `2 * sigma_hat`)
/// and refined by Newton steps that fall back to bisection whenever a step
/// would leave the bracket, so convergence never depends on the Newton
/// iteration. Work happens on `ln(sigma / sigma_hat)`, where the log-survival
/// is smooth and well scaled for any `n_k`.
pub fn uniform_sample_sigma(u: f64, params: &UniformPosteriorParams) -> Result<f64> {
    params.validate()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("u must lie in (0, 1), got {u}")));
    }
    let sh = params.sigma_hat;
    if !(sh > 0.0) {
        return Err(Error::InvalidParameter(
            "scale estimate is zero; substitute a truncated or floored scale first".into(),
        ));
    }
    let n_k = params.n_k;
    let target = (-u).ln_1p();

    // bracket [lo, hi] with g(lo) >= 0 > g(hi), g(z) = ln S(z) - ln(1 - u)
    let mut lo = 0.0;
    let mut hi = std::f64::consts::LN_2;
    while log_survival(hi, n_k).0 - target >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale quantile at u = {u} overflows (n_k = {n_k})"
            )));
        }
    }

    // For large n_k, n_k * z is close to Gamma(2, 1) with survival (1 + w) e^-w.
    let tail = -target;
    let mut w = tail;
    for _ in 0..3 {
        w = tail + w.ln_1p();
    }
    let mut z = w / n_k;
    if !(z > lo && z < hi) {
        z = 0.5 * (lo + hi);
    }

    for _ in 0..MAX_ROOT_ITERS {
        let (value, slope) = log_survival(z, n_k);
        let g = value - target;
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - g / slope;
        let next = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - z).abs();
        z = next;
        if step <= SIGMA_REL_TOL * 0.5 || hi - lo <= SIGMA_REL_TOL * 0.5 {
            break;
        }
    }
    Ok(sh * z.exp())
}

/// Location draw given a sampled scale: uniform on the interval of centre
/// `mu_hat` and width `sigma_tilde - sigma_hat`.
pub fn uniform_sample_mu(u: f64, mu_hat: f64, sigma_hat: f64, sigma_tilde: f64) -> f64 {
    let width = (sigma_tilde - sigma_hat).max(0.0);
    mu_hat + (u - 0.5) * width
}

/// Joint posterior draw `(mu_tilde, sigma_tilde)` for the uniform model.
/// Consumes exactly two `Open01` variates: the scale quantile, then the
/// location quantile.
pub fn uniform_sample_joint<R: Rng + ?Sized>(
    rng: &mut R,
    params: &UniformPosteriorParams,
) -> Result<(f64, f64)> {
    let u_sigma: f64 = rng.sample(Open01);
    let u_mu: f64 = rng.sample(Open01);
    let sigma_tilde = uniform_sample_sigma(u_sigma, params)?;
    let mu_tilde = uniform_sample_mu(u_mu, params.mu_hat, params.sigma_hat, sigma_tilde);
    Ok((mu_tilde, sigma_tilde))
}

/// `max(sigma_hat, 1/n)`, the width computed from the truncated maximum
/// `max(x_(1) + 1/n, x_(n))`.
pub fn uniform_truncated_scale(stats: &UniformStats) -> f64 {
    debug_assert!(stats.n >= 1);
    stats.mle_sigma().max(1.0 / stats.n as f64)
}

/// `sqrt(max(1, S) / n)`.
pub fn gaussian_truncated_scale(stats: &GaussianStats) -> f64 {
    debug_assert!(stats.n >= 1);
    (stats.css.max(1.0) / stats.n as f64).sqrt()
}

/// Student-t with `df` degrees of freedom, scaled by `scale` and shifted by
/// `loc`: draws are `loc + scale * T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosteriorParams {
    pub loc: f64,
    pub scale: f64,
    pub df: f64,
}

impl GaussianPosteriorParams {
    pub fn new(loc: f64, scale: f64, df: f64) -> Result<Self> {
        let params = Self { loc, scale, df };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.df > 0.0) || !self.df.is_finite() {
            return Err(Error::ImproperPosterior(self.df));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t scale must be finite and > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Posterior of the mean given `x_bar`, a scale estimate `sigma` (`sqrt(S / n)`
/// or its truncated version) and `n_k`. The kernel `(1 + (mu - x_bar)^2 / sigma^2)`
/// puts the standard-t scale at `sigma / sqrt(n_k)`.
pub fn gaussian_posterior_params(x_bar: f64, sigma: f64, n_k: f64) -> Result<GaussianPosteriorParams> {
    if !(n_k > 0.0) || !n_k.is_finite() {
        return Err(Error::ImproperPosterior(n_k));
    }
    GaussianPosteriorParams::new(x_bar, sigma / n_k.sqrt(), n_k)
}

/// Draws `loc + scale * Z / sqrt(V / df)` with `Z ~ N(0, 1)` drawn first and
/// `V ~ chi^2(df) = Gamma(df / 2, 2)` second.
pub fn gaussian_sample_mu<R: Rng + ?Sized>(rng: &mut R, params: &GaussianPosteriorParams) -> Result<f64> {
    params.validate()?;
    let z: f64 = rng.sample(StandardNormal);
    let chi2 = Gamma::new(0.5 * params.df, 2.0)
        .map_err(|e| Error::InvalidParameter(format!("chi-square({}): {e}", params.df)))?;
    let v = chi2.sample(rng);
    Ok(params.loc + params.scale * z / (v / params.df).sqrt())
}
