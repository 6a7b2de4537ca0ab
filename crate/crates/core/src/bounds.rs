//! KL infima and the asymptotic regret lower bound
//! `liminf E[Reg(T)] / log T >= sum_i Delta_i / KLinf_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{gap_vector, BanditInstance, Model};

fn check_args(delta: f64, sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("gap must be >= 0, got {delta}")));
    }
    Ok(())
}

/// `log(1 + 2 delta / sigma)` for uniform arms.
pub fn klinf_uniform(delta: f64, sigma: f64) -> Result<f64> {
    check_args(delta, sigma)?;
    Ok((2.0 * delta / sigma).ln_1p())
}

/// `0.5 log(1 + (delta / sigma)^2)` for Gaussian arms.
pub fn klinf_gaussian(delta: f64, sigma: f64) -> Result<f64> {
    check_args(delta, sigma)?;
    let r = delta / sigma;
    Ok(0.5 * (r * r).ln_1p())
}

pub fn klinf(model: Model, delta: f64, sigma: f64) -> Result<f64> {
    match model {
        Model::Uniform => klinf_uniform(delta, sigma),
        Model::Gaussian => klinf_gaussian(delta, sigma),
    }
}

/// `sum over arms with positive gap of Delta_i / KLinf_i`. Arms tied with
/// the best mean have zero gap and are left out.
pub fn lb_coefficient(instance: &BanditInstance) -> f64 {
    let gaps = gap_vector(instance);
    instance
        .arms()
        .iter()
        .zip(&gaps.gaps)
        .filter(|(_, &d)| d > 0.0)
        .map(|(arm, &d)| {
            d / klinf(instance.model(), d, arm.sigma).expect("valid instance has sigma > 0")
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `coefficient * log(t)` on the given grid (clamped at zero below `t = 1`).
pub fn lb_curve(instance: &BanditInstance, t_grid: &[f64]) -> Result<LowerBoundCurve> {
    if let Some(bad) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid point {bad} is not positive")));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be strictly ascending".into()));
    }
    let c = lb_coefficient(instance);
    let values = t_grid.iter().map(|t| (c * t.ln()).max(0.0)).collect();
    Ok(LowerBoundCurve {
        t_grid: t_grid.to_vec(),
        values,
    })
}

/// Integer grid from 1 to `horizon` with `per_decade` log-spaced points per
/// decade; always contains 1 and `horizon`.
pub fn log_grid(horizon: u64, per_decade: u32) -> Vec<u64> {
    let mut grid = vec![1u64];
    if horizon > 1 {
        let steps = ((horizon as f64).log10() * per_decade as f64).ceil() as u32;
        for j in 1..=steps {
            let t = 10f64.powf(j as f64 / per_decade as f64).round() as u64;
            if t > *grid.last().unwrap() && t < horizon {
                grid.push(t);
            }
        }
        grid.push(horizon);
    }
    grid
}
