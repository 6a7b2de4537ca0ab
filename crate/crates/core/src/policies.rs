//! Thompson sampling (TS) and Thompson sampling with truncation (TS-T).
//!
//! Every round each arm draws a posterior sample of its mean, in arm-index
//! order and from the single run stream, and the policy plays the argmax.
//! TS parameterizes the posterior with the MLE of the scale; TS-T uses the
//! truncated scale estimate instead, which keeps early posteriors from
//! collapsing onto a point.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{BanditInstance, Model};
use crate::posteriors::{
    degenerate_scale_floor, gaussian_posterior_params, gaussian_sample_mu, gaussian_truncated_scale, prior_k_for,
    uniform_sample_joint, uniform_truncated_scale, NamedPrior, PriorK,
    UniformPosteriorParams,
};
use crate::rewards::{sample_reward, ArmStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Ts,
    Tst,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Ts => f.write_str("ts"),
            PolicyKind::Tst => f.write_str("tst"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ts" => Ok(PolicyKind::Ts),
            "tst" => Ok(PolicyKind::Tst),
            other => Err(Error::InvalidParameter(format!("unknown policy kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub k: PriorK,
    pub model: Model,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, k: f64, model: Model) -> Result<Self> {
        Ok(Self {
            kind,
            k: PriorK::new(k)?,
            model,
        })
    }

    /// Parses `ts:k=<real>`, `tst:k=<real>` or `<kind>:<prior name>`.
    pub fn parse(spec: &str, model: Model) -> Result<Self> {
        let (kind, prior) = spec.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "policy spec {spec:?} must look like ts:k=<real> or tst:<prior>"
            ))
        })?;
        let kind: PolicyKind = kind.trim().parse()?;
        let prior = prior.trim();
        let k = match prior.strip_prefix("k=") {
            Some(value) => value.trim().parse::<f64>().map_err(|e| {
                Error::InvalidParameter(format!("bad prior exponent {value:?}: {e}"))
            })?,
            None => prior_k_for(prior.parse::<NamedPrior>()?).value(),
        };
        Self::new(kind, k, model)
    }

    /// Canonical `kind:k=<k>` spec string.
    pub fn spec_string(&self) -> String {
        format!("{}:k={}", self.kind, self.k)
    }

    pub fn initial_plays(&self) -> u64 {
        initial_play_count(self.model, self.k)
    }

    /// Vanilla TS with `k >= 1` does not attain the regret lower bound in
    /// either model.
    pub fn known_suboptimal(&self) -> bool {
        self.kind == PolicyKind::Ts && self.k.value() >= 1.0
    }
}

/// Number of forced plays per arm before the posterior is proper.
///
/// Uniform: `max(2, 3 - ceil(k))`. Gaussian: the smallest `n >= 2` with
/// `n + k - 2 >= 1`, i.e. `max(2, ceil(3 - k))`.
pub fn initial_play_count(model: Model, k: PriorK) -> u64 {
    let k = k.value();
    let n0 = match model {
        Model::Uniform => 3.0 - k.ceil(),
        Model::Gaussian => (3.0 - k).ceil(),
    };
    n0.max(2.0) as u64
}

/// An arm whose sampled index is pinned to its true mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracArm {
    pub fixed_mu: f64,
}

impl DiracArm {
    pub fn index(&self) -> f64 {
        self.fixed_mu
    }
}

pub fn make_dirac_arm(mu2: f64) -> DiracArm {
    DiracArm { fixed_mu: mu2 }
}

/// Per-run policy state: sufficient statistics (whose counts are the play
/// counts `N_i(t)`) and the 1-based round counter `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    stats: Vec<ArmStats>,
    round: u64,
    degenerate_scales: u64,
    scratch: Vec<f64>,
}

impl PolicyState {
    pub fn new(model: Model, num_arms: usize) -> Self {
        Self {
            stats: vec![ArmStats::empty(model); num_arms],
            round: 1,
            degenerate_scales: 0,
            scratch: Vec::with_capacity(num_arms),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.stats.len()
    }

    /// Current round `t`; `sum_i N_i(t) = t - 1`.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.stats[arm].count()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.stats.iter().map(ArmStats::count).collect()
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    /// How often vanilla sampling met a zero scale estimate and fell back to
    /// [`degenerate_scale_floor`].
    pub fn degenerate_scale_count(&self) -> u64 {
        self.degenerate_scales
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.stats[arm].update(reward);
        self.round += 1;
    }

    /// Whether the truncated scale of some arm currently differs from its MLE.
    pub fn truncation_binding(&self) -> bool {
        self.stats.iter().any(|s| match s {
            ArmStats::Uniform(u) => u.n > 0 && u.mle_sigma() < 1.0 / u.n as f64,
            ArmStats::Gaussian(g) => g.n > 0 && g.css < 1.0,
        })
    }
}

/// TS / TS-T decision rule with optional Dirac-oracle overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ThompsonPolicy {
    config: PolicyConfig,
    n0: u64,
    dirac: Vec<(usize, DiracArm)>,
}

impl ThompsonPolicy {
    pub fn new(config: PolicyConfig) -> Self {
        Self {
            n0: config.initial_plays(),
            config,
            dirac: Vec::new(),
        }
    }

    /// Pins the sampled index of `arm` to `dirac.fixed_mu`.
    pub fn with_dirac_arm(mut self, arm: usize, dirac: DiracArm) -> Self {
        self.dirac.retain(|(a, _)| *a != arm);
        self.dirac.push((arm, dirac));
        self
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn initial_plays(&self) -> u64 {
        self.n0
    }

    fn dirac_for(&self, arm: usize) -> Option<&DiracArm> {
        self.dirac.iter().find(|(a, _)| *a == arm).map(|(_, d)| d)
    }

    /// Posterior sample of the mean of `arm`.
    fn sample_index<R: Rng + ?Sized>(&self, state: &mut PolicyState, arm: usize, rng: &mut R) -> Result<f64> {
        if let Some(d) = self.dirac_for(arm) {
            return Ok(d.index());
        }
        let truncate = self.config.kind == PolicyKind::Tst;
        match state.stats[arm] {
            ArmStats::Uniform(s) => {
                let n_k = self.config.k.n_k(s.n);
                let mu_hat = s.mle_mu();
                let scale = if truncate {
                    uniform_truncated_scale(&s)
                } else {
                    let sh = s.mle_sigma();
                    if sh > 0.0 {
                        sh
                    } else {
                        state.degenerate_scales += 1;
                        degenerate_scale_floor(mu_hat)
                    }
                };
                let params = UniformPosteriorParams::new(mu_hat, scale, n_k)?;
                Ok(uniform_sample_joint(rng, &params)?.0)
            }
            ArmStats::Gaussian(s) => {
                let df = self.config.k.n_k(s.n);
                let scale = if truncate {
                    gaussian_truncated_scale(&s)
                } else {
                    let sh = s.mle_sigma();
                    if sh > 0.0 {
                        sh
                    } else {
                        state.degenerate_scales += 1;
                        degenerate_scale_floor(s.mean)
                    }
                };
                let params = gaussian_posterior_params(s.mean, scale, df)?;
                gaussian_sample_mu(rng, &params)
            }
        }
    }

    /// Samples every arm in index order and returns the argmax, breaking
    /// exact ties uniformly at random. Randomness for tie-breaking is only
    /// consumed when a tie occurs.
    pub fn select<R: Rng + ?Sized>(&self, state: &mut PolicyState, rng: &mut R) -> Result<usize> {
        for arm in 0..state.num_arms() {
            let observed = state.count(arm);
            if observed < self.n0 && self.dirac_for(arm).is_none() {
                return Err(Error::InsufficientObservations {
                    arm,
                    observed,
                    required: self.n0,
                });
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_arm = 0;
        let mut ties = 0usize;
        state.scratch.clear();
        for arm in 0..state.num_arms() {
            let value = self.sample_index(state, arm, rng)?;
            state.scratch.push(value);
            if value > best {
                best = value;
                best_arm = arm;
                ties = 1;
            } else if value == best {
                ties += 1;
            }
        }
        if ties <= 1 {
            return Ok(best_arm);
        }
        let pick = rng.random_range(0..ties);
        Ok(state
            .scratch
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == best)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("pick is below the tie count"))
    }
}

/// One TS / TS-T selection without Dirac overrides.
pub fn ts_select<R: Rng + ?Sized>(state: &mut PolicyState, cfg: &PolicyConfig, rng: &mut R) -> Result<usize> {
    ThompsonPolicy::new(*cfg).select(state, rng)
}

/// Arm order of the forced initial phase: `n0` sweeps over the arms in index order.
pub fn initial_schedule(num_arms: usize, n0: u64) -> impl Iterator<Item = usize> {
    (0..n0).flat_map(move |_| 0..num_arms)
}

/// Plays every arm `n0` times round-robin, returning the arms in play order.
pub fn run_initial_phase<R: Rng + ?Sized>(
    state: &mut PolicyState,
    cfg: &PolicyConfig,
    instance: &BanditInstance,
    rng: &mut R,
) -> Vec<usize> {
    let order: Vec<usize> = initial_schedule(instance.num_arms(), cfg.initial_plays()).collect();
    for &arm in &order {
        let x = sample_reward(instance, arm, rng);
        state.record(arm, x);
    }
    order
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::rewards::UniformStats;

    fn k(v: f64) -> PriorK {
        PriorK::new(v).unwrap()
    }

    #[test]
    fn initial_plays() {
        assert_eq!(initial_play_count(Model::Uniform, k(0.0)), 3);
        assert_eq!(initial_play_count(Model::Uniform, k(1.0)), 2);
        assert_eq!(initial_play_count(Model::Uniform, k(2.0)), 2);
        assert_eq!(initial_play_count(Model::Uniform, k(0.5)), 2);
        assert_eq!(initial_play_count(Model::Uniform, k(-1.0)), 4);
        assert_eq!(initial_play_count(Model::Gaussian, k(0.0)), 3);
        assert_eq!(initial_play_count(Model::Gaussian, k(1.0)), 2);
        assert_eq!(initial_play_count(Model::Gaussian, k(0.5)), 3);
        assert_eq!(initial_play_count(Model::Gaussian, k(3.0)), 2);
    }

    #[test]
    fn initial_phase_posteriors_are_proper() {
        for &kv in &[-2.5, -1.0, -0.3, 0.0, 0.2, 1.0, 1.7, 2.0, 4.0] {
            let n_u = initial_play_count(Model::Uniform, k(kv));
            assert!(k(kv).n_k(n_u) > 0.0, "uniform k={kv}");
            let n_g = initial_play_count(Model::Gaussian, k(kv));
            assert!(k(kv).n_k(n_g) >= 1.0, "gaussian k={kv}");
        }
    }

    #[test]
    fn parse_policy_specs() {
        let p = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        assert_eq!((p.kind, p.k.value()), (PolicyKind::Ts, 0.0));
        let p = PolicyConfig::parse("tst:k=1.5", Model::Gaussian).unwrap();
        assert_eq!((p.kind, p.k.value(), p.model), (PolicyKind::Tst, 1.5, Model::Gaussian));
        assert_eq!(PolicyConfig::parse("ts:reference", Model::Uniform).unwrap().k.value(), 1.0);
        assert_eq!(PolicyConfig::parse("tst:jeffreys", Model::Uniform).unwrap().k.value(), 2.0);
        assert_eq!(PolicyConfig::parse("ts:uniform-ls", Model::Uniform).unwrap().k.value(), 0.0);
        assert_eq!(
            PolicyConfig::parse("ts:uniform-location-rate", Model::Uniform).unwrap().k.value(),
            2.0
        );
        for bad in ["ts", "ucb:k=1", "ts:k=abc", "ts:flat", "ts:k=inf"] {
            assert!(PolicyConfig::parse(bad, Model::Uniform).is_err(), "{bad}");
        }
        let p = PolicyConfig::parse("tst:reference", Model::Uniform).unwrap();
        assert_eq!(p.spec_string(), "tst:k=1");
        assert_eq!(PolicyConfig::parse(&p.spec_string(), Model::Uniform).unwrap(), p);
    }

    #[test]
    fn suboptimal_flag() {
        assert!(!PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap().known_suboptimal());
        assert!(PolicyConfig::parse("ts:k=1", Model::Uniform).unwrap().known_suboptimal());
        assert!(PolicyConfig::parse("ts:k=2", Model::Gaussian).unwrap().known_suboptimal());
        assert!(!PolicyConfig::parse("tst:k=2", Model::Uniform).unwrap().known_suboptimal());
    }

    #[test]
    fn initial_phase_round_robin() {
        let inst = BanditInstance::paper_uniform_6arm();
        let cfg = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        let mut state = PolicyState::new(Model::Uniform, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let order = run_initial_phase(&mut state, &cfg, &inst, &mut rng);
        assert_eq!(order.len(), 18);
        assert_eq!(state.round(), 19);
        assert_eq!(state.counts(), vec![3; 6]);
        assert_eq!(state.counts().iter().sum::<u64>(), state.round() - 1);

        let pair = BanditInstance::theorem2_pair();
        let cfg = PolicyConfig::parse("ts:k=1", Model::Uniform).unwrap();
        let mut state = PolicyState::new(Model::Uniform, 2);
        let order = run_initial_phase(&mut state, &cfg, &pair, &mut rng);
        assert_eq!(order, vec![0, 1, 0, 1]);
    }

    #[test]
    fn select_needs_initial_phase() {
        let cfg = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        let mut state = PolicyState::new(Model::Uniform, 2);
        state.record(0, 0.1);
        state.record(1, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = ts_select(&mut state, &cfg, &mut rng).unwrap_err();
        assert!(matches!(err, Error::InsufficientObservations { arm: 0, observed: 1, required: 3 }));
    }

    #[test]
    fn dirac_arm_is_constant_and_exempt() {
        let d = make_dirac_arm(0.05);
        assert_eq!(d.index(), 0.05);
        let cfg = PolicyConfig::parse("ts:k=1", Model::Uniform).unwrap();
        let policy = ThompsonPolicy::new(cfg).with_dirac_arm(1, d);
        let mut state = PolicyState::new(Model::Uniform, 2);
        state.record(0, 0.2);
        state.record(0, 0.9);
        // arm 1 never observed: still selectable
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            policy.select(&mut state, &mut rng).unwrap();
        }
    }

    #[test]
    fn dirac_beats_collapsed_posterior() {
        // Arm 0 observed only near the bottom of its support: sampled means
        // sit well under the Dirac index 0.05 ~ always.
        let cfg = PolicyConfig::parse("ts:k=2", Model::Uniform).unwrap();
        let policy = ThompsonPolicy::new(cfg).with_dirac_arm(1, make_dirac_arm(0.05));
        let mut state = PolicyState::new(Model::Uniform, 2);
        for x in [0.0, 0.001, 0.002, 0.003, 0.004] {
            state.record(0, x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let picks_dirac = (0..1000)
            .filter(|_| policy.select(&mut state, &mut rng).unwrap() == 1)
            .count();
        assert!(picks_dirac > 900, "{picks_dirac}");
    }

    #[test]
    fn ties_split_evenly() {
        let cfg = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        let policy = ThompsonPolicy::new(cfg)
            .with_dirac_arm(0, make_dirac_arm(1.0))
            .with_dirac_arm(1, make_dirac_arm(1.0));
        let mut state = PolicyState::new(Model::Uniform, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let first = (0..n)
            .filter(|_| policy.select(&mut state, &mut rng).unwrap() == 0)
            .count();
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{freq}");
    }

    fn uniform_state(arms: &[UniformStats]) -> PolicyState {
        let mut state = PolicyState::new(Model::Uniform, arms.len());
        for (i, s) in arms.iter().enumerate() {
            state.stats[i] = ArmStats::Uniform(*s);
        }
        state.round = arms.iter().map(|s| s.n).sum::<u64>() + 1;
        state
    }

    #[test]
    fn identical_arms_are_exchangeable() {
        let s = UniformStats { n: 5, x_min: 0.0, x_max: 1.0 };
        let mut state = uniform_state(&[s, s]);
        let cfg = PolicyConfig::parse("ts:k=1", Model::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10_000;
        let first = (0..n)
            .filter(|_| ts_select(&mut state, &cfg, &mut rng).unwrap() == 0)
            .count();
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{freq}");
    }

    #[test]
    fn shifted_arm_dominates() {
        let a = UniformStats { n: 50, x_min: 0.9, x_max: 1.9 };
        let b = UniformStats { n: 50, x_min: 0.0, x_max: 1.0 };
        let mut state = uniform_state(&[a, b]);
        let cfg = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let picks = (0..n)
            .filter(|_| ts_select(&mut state, &cfg, &mut rng).unwrap() == 0)
            .count();
        assert!(picks as f64 / n as f64 > 0.95, "{picks}");
    }

    #[test]
    fn zero_scale_is_floored_under_ts() {
        let s = UniformStats { n: 3, x_min: 2.0, x_max: 2.0 };
        let t = UniformStats { n: 3, x_min: 0.0, x_max: 1.0 };
        let mut state = uniform_state(&[s, t]);
        let cfg = PolicyConfig::parse("ts:k=0", Model::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        ts_select(&mut state, &cfg, &mut rng).unwrap();
        assert_eq!(state.degenerate_scale_count(), 1);

        let cfg = PolicyConfig::parse("tst:k=0", Model::Uniform).unwrap();
        ts_select(&mut state, &cfg, &mut rng).unwrap();
        assert_eq!(state.degenerate_scale_count(), 1);
        assert!(state.truncation_binding());
    }

    #[test]
    fn tst_matches_ts_when_truncation_idle() {
        let a = UniformStats { n: 4, x_min: 0.0, x_max: 0.8 };
        let b = UniformStats { n: 6, x_min: 0.3, x_max: 1.0 };
        let c = UniformStats { n: 3, x_min: -0.5, x_max: 0.9 };
        let base = uniform_state(&[a, b, c]);
        assert!(!base.truncation_binding());
        let ts = PolicyConfig::parse("ts:k=1", Model::Uniform).unwrap();
        let tst = PolicyConfig::parse("tst:k=1", Model::Uniform).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let mut s1 = base.clone();
        let mut s2 = base.clone();
        for _ in 0..500 {
            assert_eq!(
                ts_select(&mut s1, &ts, &mut r1).unwrap(),
                ts_select(&mut s2, &tst, &mut r2).unwrap()
            );
        }
    }
}
