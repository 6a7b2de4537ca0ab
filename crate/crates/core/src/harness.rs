//! Seeded Monte-Carlo regret experiments.
//!
//! Each run draws its randomness from a stream derived from
//! `(master_seed, run_index)` only, and runs are reduced in run-index order,
//! so the aggregated trace does not depend on how many workers executed it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::log_grid;
use crate::error::{Error, Result};
use crate::instance::{gap_vector, BanditInstance};
use crate::policies::{initial_schedule, make_dirac_arm, PolicyConfig, PolicyState, ThompsonPolicy};
use crate::rewards::sample_reward;
use crate::seed::SeedSpec;

pub const DEFAULT_RECORD_STRIDE: u64 = 10;
const LOG_POINTS_PER_DECADE: u32 = 20;
const REDUCE_CHUNK: u64 = 64;

fn default_stride() -> u64 {
    DEFAULT_RECORD_STRIDE
}

/// Optional experiment variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostic {
    /// Arm index 1 samples its true mean every round (Dirac-oracle arm).
    Theorem2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub runs: u64,
    pub master_seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
}

impl ExperimentConfig {
    pub fn new(instance: BanditInstance, policy: PolicyConfig, horizon: u64, runs: u64, master_seed: u64) -> Self {
        Self {
            instance,
            policy,
            horizon,
            runs,
            master_seed,
            record_stride: DEFAULT_RECORD_STRIDE,
            diagnostic: None,
        }
    }

    pub fn with_stride(mut self, stride: u64) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_diagnostic(mut self, diagnostic: Diagnostic) -> Self {
        self.diagnostic = Some(diagnostic);
        self
    }

    /// Rounds spent in the forced initial phase, `K * n0`.
    pub fn initial_rounds(&self) -> u64 {
        self.instance.num_arms() as u64 * self.policy.initial_plays()
    }

    pub fn validate(&self) -> Result<()> {
        if self.policy.model != self.instance.model() {
            return Err(Error::InvalidConfig(format!(
                "policy is for the {} model but the instance is {}",
                self.policy.model,
                self.instance.model()
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be >= 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        let initial = self.initial_rounds();
        if self.horizon < initial {
            return Err(Error::HorizonTooShort {
                horizon: self.horizon,
                initial,
            });
        }
        Ok(())
    }

    pub fn thompson_policy(&self) -> ThompsonPolicy {
        let policy = ThompsonPolicy::new(self.policy);
        match self.diagnostic {
            Some(Diagnostic::Theorem2) => {
                policy.with_dirac_arm(1, make_dirac_arm(self.instance.arm(1).mu))
            }
            None => policy,
        }
    }

    /// Rounds at which cumulative regret is recorded.
    pub fn record_points(&self) -> Vec<u64> {
        record_points(self.horizon, self.record_stride)
    }
}

/// Multiples of `stride`, a log-spaced grid and the horizon itself, ascending.
pub fn record_points(horizon: u64, stride: u64) -> Vec<u64> {
    let stride = stride.max(1);
    let mut points: Vec<u64> = (1..=horizon / stride).map(|j| j * stride).collect();
    if horizon >= 1 {
        points.extend(log_grid(horizon, LOG_POINTS_PER_DECADE));
    }
    points.sort_unstable();
    points.dedup();
    points
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Cumulative pseudo-regret at each record point.
    pub recorded: Vec<f64>,
    /// `N_i(T + 1)`.
    pub play_counts: Vec<u64>,
    /// `sum_t Delta_{j(t)}` accumulated round by round.
    pub pseudo_regret: f64,
    pub degenerate_scales: u64,
}

/// Simulates one run, calling `observer(t, arm, state)` for every round
/// after the arm is chosen and before its reward is observed.
pub fn simulate_run<F>(config: &ExperimentConfig, run_index: u64, mut observer: F) -> Result<RunResult>
where
    F: FnMut(u64, usize, &PolicyState),
{
    config.validate()?;
    let instance = &config.instance;
    let gaps = gap_vector(instance).gaps;
    let policy = config.thompson_policy();
    let points = config.record_points();
    let mut rng = SeedSpec::new(config.master_seed, run_index).rng();
    let mut state = PolicyState::new(instance.model(), instance.num_arms());
    let mut schedule = initial_schedule(instance.num_arms(), policy.initial_plays());

    let mut recorded = Vec::with_capacity(points.len());
    let mut next_point = 0;
    let mut regret = 0.0;
    for t in 1..=config.horizon {
        let arm = match schedule.next() {
            Some(arm) => arm,
            None => policy.select(&mut state, &mut rng)?,
        };
        observer(t, arm, &state);
        let x = sample_reward(instance, arm, &mut rng);
        state.record(arm, x);
        regret += gaps[arm];
        if next_point < points.len() && points[next_point] == t {
            recorded.push(regret);
            next_point += 1;
        }
    }
    Ok(RunResult {
        recorded,
        play_counts: state.counts(),
        pseudo_regret: regret,
        degenerate_scales: state.degenerate_scale_count(),
    })
}

pub fn run_single(config: &ExperimentConfig, run_index: u64) -> Result<RunResult> {
    simulate_run(config, run_index, |_, _, _| {})
}

/// Mean cumulative pseudo-regret across runs with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub t_points: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub stderr: Vec<f64>,
    pub run_count: u64,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.t_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_points.is_empty()
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean_regret.last().unwrap_or(&0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().unwrap_or(&0.0)
    }

    /// Mean and standard error at round `t`, if `t` was recorded.
    pub fn at(&self, t: u64) -> Option<(f64, f64)> {
        self.t_points
            .binary_search(&t)
            .ok()
            .map(|i| (self.mean_regret[i], self.stderr[i]))
    }
}

/// Neumaier-compensated sum plus Welford moments, fed in run-index order.
#[derive(Debug, Clone, Copy, Default)]
struct PointAccumulator {
    n: u64,
    sum: f64,
    compensation: f64,
    mean: f64,
    m2: f64,
}

impl PointAccumulator {
    fn push(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;

        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        (self.sum + self.compensation) / self.n as f64
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = self.m2.max(0.0) / (self.n - 1) as f64;
        (var / self.n as f64).sqrt()
    }
}

/// Runs the experiment on rayon's current thread pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretTrace> {
    config.validate()?;
    let points = config.record_points();
    let mut acc = vec![PointAccumulator::default(); points.len()];
    let mut start = 0;
    while start < config.runs {
        let end = (start + REDUCE_CHUNK).min(config.runs);
        let chunk: Vec<RunResult> = (start..end)
            .into_par_iter()
            .map(|run| run_single(config, run))
            .collect::<Result<_>>()?;
        for run in &chunk {
            for (a, &x) in acc.iter_mut().zip(&run.recorded) {
                a.push(x);
            }
        }
        start = end;
    }
    Ok(RegretTrace {
        t_points: points,
        mean_regret: acc.iter().map(PointAccumulator::mean).collect(),
        stderr: acc.iter().map(PointAccumulator::stderr).collect(),
        run_count: config.runs,
    })
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: usize) -> Result<RegretTrace> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_experiment(config))
}

/// Least-squares slope of `ln(mean_regret)` against `ln(t)` over the recorded
/// points with `t_lo <= t <= t_hi`.
///
/// Only points of the log-spaced record grid enter the fit, so each decade
/// carries equal weight; the stride points would otherwise swamp the fit
/// with its upper end. Traces without log-grid points (e.g. a CSV written
/// with other record points) fall back to every point in the window.
pub fn fit_growth_exponent(trace: &RegretTrace, t_lo: u64, t_hi: u64) -> Result<f64> {
    if t_lo >= t_hi {
        return Err(Error::Fit(format!("empty window [{t_lo}, {t_hi}]")));
    }
    let in_window = |t: u64| t >= t_lo && t <= t_hi;
    let grid = trace
        .t_points
        .last()
        .map(|&last| log_grid(last, LOG_POINTS_PER_DECADE))
        .unwrap_or_default();
    let on_grid = trace
        .t_points
        .iter()
        .filter(|&&t| in_window(t) && grid.binary_search(&t).is_ok())
        .count();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &r) in trace.t_points.iter().zip(&trace.mean_regret) {
        if !in_window(t) || (on_grid >= 2 && grid.binary_search(&t).is_err()) {
            continue;
        }
        if !(r > 0.0) {
            return Err(Error::Fit(format!("mean regret {r} at t = {t} is not positive")));
        }
        xs.push((t as f64).ln());
        ys.push(r.ln());
    }
    if xs.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 recorded points in [{t_lo}, {t_hi}], found {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Model;

    fn config(instance: BanditInstance, spec: &str, horizon: u64, runs: u64) -> ExperimentConfig {
        let policy = PolicyConfig::parse(spec, instance.model()).unwrap();
        ExperimentConfig::new(instance, policy, horizon, runs, 42)
    }

    #[test]
    fn record_points_cover_stride_and_log_grid() {
        let p = record_points(1000, 10);
        assert_eq!(p[0], 1);
        assert!(p.contains(&10) && p.contains(&1000) && p.contains(&2) && p.contains(&3));
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*record_points(1005, 10).last().unwrap(), 1005);
    }

    #[test]
    fn config_validation() {
        let inst = BanditInstance::paper_uniform_6arm();
        assert!(config(inst.clone(), "ts:k=0", 18, 1).validate().is_ok());
        assert!(matches!(
            config(inst.clone(), "ts:k=0", 17, 1).validate(),
            Err(Error::HorizonTooShort { horizon: 17, initial: 18 })
        ));
        assert!(config(inst.clone(), "ts:k=0", 100, 0).validate().is_err());
        assert!(config(inst.clone(), "ts:k=0", 100, 1).with_stride(0).validate().is_err());
        let mut mismatched = config(inst, "ts:k=0", 100, 1);
        mismatched.policy.model = Model::Gaussian;
        assert!(mismatched.validate().is_err());
    }

    #[test]
    fn identical_arms_have_no_regret() {
        let inst = BanditInstance::from_params(Model::Uniform, &[1.0, 1.0, 1.0], &[1.0, 2.0, 0.5]).unwrap();
        let run = run_single(&config(inst.clone(), "ts:k=0", 500, 1), 3).unwrap();
        assert!(run.recorded.iter().all(|&r| r == 0.0));
        let trace = run_experiment(&config(inst, "tst:k=1", 300, 100)).unwrap();
        assert!(trace.mean_regret.iter().all(|&r| r == 0.0));
        assert!(trace.stderr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_run_is_reproducible() {
        let cfg = config(BanditInstance::paper_gaussian_6arm(), "ts:k=1", 2000, 1);
        assert_eq!(run_single(&cfg, 5).unwrap(), run_single(&cfg, 5).unwrap());
        assert_ne!(run_single(&cfg, 5).unwrap().recorded, run_single(&cfg, 6).unwrap().recorded);
    }

    #[test]
    fn one_run_experiment_equals_the_run() {
        let cfg = config(BanditInstance::paper_uniform_6arm(), "tst:k=1", 1000, 1);
        let trace = run_experiment(&cfg).unwrap();
        let run = run_single(&cfg, 0).unwrap();
        assert_eq!(trace.mean_regret, run.recorded);
        assert!(trace.stderr.iter().all(|&s| s == 0.0));
        assert_eq!(trace.run_count, 1);
    }

    #[test]
    fn regret_identity_and_bounds() {
        let inst = BanditInstance::from_params(Model::Uniform, &[0.5, 0.3], &[1.0, 1.0]).unwrap();
        let cfg = config(inst, "ts:k=0", 10_000, 1);
        let gaps = [0.0, 0.2];
        let run = run_single(&cfg, 0).unwrap();
        let by_counts: f64 = run.play_counts.iter().zip(gaps).map(|(&n, d)| n as f64 * d).sum();
        assert!((run.pseudo_regret - by_counts).abs() <= 1e-9 * by_counts.max(1.0));
        assert_eq!(run.play_counts.iter().sum::<u64>(), 10_000);
        assert!(run.pseudo_regret >= 0.0 && run.pseudo_regret <= 0.2 * 10_000.0);
        assert!(run.recorded.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_lookup() {
        let cfg = config(BanditInstance::paper_uniform_6arm(), "ts:k=0", 500, 3);
        let trace = run_experiment(&cfg).unwrap();
        assert_eq!(trace.at(500).unwrap().0, trace.final_mean());
        assert!(trace.at(7777).is_none());
        assert!(trace.stderr.iter().all(|&s| s >= 0.0));
    }

    fn synthetic(f: impl Fn(f64) -> f64, lo: u64, hi: u64) -> RegretTrace {
        let t_points = log_grid(hi, 20).into_iter().filter(|&t| t >= lo).collect::<Vec<_>>();
        let mean_regret = t_points.iter().map(|&t| f(t as f64)).collect::<Vec<_>>();
        RegretTrace {
            stderr: vec![0.0; t_points.len()],
            t_points,
            mean_regret,
            run_count: 1,
        }
    }

    #[test]
    fn exponent_of_power_law() {
        let trace = synthetic(|t| 3.0 * t.sqrt(), 10, 100_000);
        let a = fit_growth_exponent(&trace, 10, 100_000).unwrap();
        assert!((a - 0.5).abs() < 1e-9, "{a}");
    }

    #[test]
    fn exponent_of_log_curve() {
        // least-squares slope of ln(ln t) on ln t over the grid points in [1e3, 1e5]
        let trace = synthetic(|t| 2.0 * t.ln(), 1, 100_000);
        let a = fit_growth_exponent(&trace, 1000, 100_000).unwrap();
        let endpoint_slope = (100_000f64.ln() / 1000f64.ln()).ln() / 100f64.ln();
        assert!((endpoint_slope - 0.1109).abs() < 1e-3);
        assert!(a > 0.10 && a < 0.12, "{a}");
    }

    #[test]
    fn stride_points_do_not_reweight_the_fit() {
        let grid_only = synthetic(|t| 2.0 * t.ln(), 1, 100_000);
        let t_points = record_points(100_000, 10);
        let dense = RegretTrace {
            mean_regret: t_points.iter().map(|&t| 2.0 * (t as f64).ln()).collect(),
            stderr: vec![0.0; t_points.len()],
            t_points,
            run_count: 1,
        };
        let a = fit_growth_exponent(&grid_only, 1000, 100_000).unwrap();
        let b = fit_growth_exponent(&dense, 1000, 100_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponent_errors() {
        let trace = synthetic(|t| t - 10.0, 1, 1000);
        assert!(fit_growth_exponent(&trace, 1, 1000).is_err());
        assert!(fit_growth_exponent(&trace, 500, 100).is_err());
        let trace = synthetic(|t| t, 1, 1000);
        assert!(fit_growth_exponent(&trace, 998, 999).is_err());
    }
}
