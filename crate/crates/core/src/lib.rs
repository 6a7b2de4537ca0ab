//! Thompson sampling laboratory for location-scale bandits.
//!
//! Implements Thompson sampling (TS) and Thompson sampling with truncation
//! (TS-T) under the noninformative priors `sigma^(-k)` for uniform rewards
//! with unknown support and Gaussian rewards with unknown mean and variance,
//! together with a seeded Monte-Carlo regret harness and the asymptotic
//! regret lower bound.
//!
//! Module map:
//! - [`instance`], [`seed`]: environments, gaps and per-run random streams.
//! - [`rewards`]: reward draws and streaming sufficient statistics.
//! - [`posteriors`]: closed-form posterior samplers and their truncated variants.
//! - [`policies`]: the TS / TS-T selection rule, initial plays, Dirac-oracle arms.
//! - [`bounds`]: KL infima and the lower-bound curve.
//! - [`harness`], [`trace_io`]: experiments, aggregation and persistence.
//! - [`validation`]: KS and moment checks of the samplers.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod instance;
pub mod policies;
pub mod posteriors;
pub mod rewards;
pub mod seed;
pub mod trace_io;
pub mod validation;

pub use bounds::{klinf_gaussian, klinf_uniform, lb_coefficient, lb_curve, LowerBoundCurve};
pub use error::{Error, Result};
pub use harness::{
    fit_growth_exponent, run_experiment, run_experiment_with_workers, run_single, simulate_run,
    Diagnostic, ExperimentConfig, RegretTrace, RunResult,
};
pub use instance::{gap_vector, Arm, BanditInstance, GapVector, Model};
pub use policies::{
    initial_play_count, make_dirac_arm, run_initial_phase, ts_select, DiracArm, PolicyConfig,
    PolicyKind, PolicyState, ThompsonPolicy,
};
pub use posteriors::{prior_k_for, NamedPrior, PriorK};
pub use seed::{derive_run_seed, RunRng, SeedSpec};
pub use trace_io::{ExperimentResult, TraceFormat};
