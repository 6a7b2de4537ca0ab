use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use banditlab_core::bounds::log_grid;
use banditlab_core::trace_io::write_trace;
use banditlab_core::validation::check_samplers;
use banditlab_core::{
    fit_growth_exponent, lb_coefficient, lb_curve, run_experiment, run_experiment_with_workers,
    BanditInstance, Diagnostic, ExperimentConfig, ExperimentResult, PolicyConfig, RegretTrace,
    TraceFormat,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "banditlab", version, about = "Thompson sampling experiments for location-scale bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo regret experiment and write its trace.
    Run(RunArgs),
    /// Write the asymptotic regret lower bound on a log grid as CSV.
    LowerBound(LowerBoundArgs),
    /// Fit the regret growth exponent of TS(k) against a Dirac-oracle second arm.
    DiagTheorem2(DiagArgs),
    /// Check the posterior samplers with KS and moment statistics.
    KsCheck(KsArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; falls back to BANDITLAB_SEED, then 0.
    #[arg(long, env = "BANDITLAB_SEED")]
    seed: Option<u64>,
}

impl SeedArg {
    fn value(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Built-in instance name or path to an instance JSON file.
    #[arg(long, required_unless_present = "config")]
    instance: Option<String>,
    /// Policy spec: ts:k=<real>, tst:k=<real>, or <kind>:<prior name>.
    #[arg(long, required_unless_present = "config")]
    policy: Option<String>,
    /// Horizon.
    #[arg(long = "T", required_unless_present = "config")]
    horizon: Option<u64>,
    #[arg(long, required_unless_present = "config")]
    runs: Option<u64>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
    /// csv or json; defaults to the extension of --out.
    #[arg(long)]
    format: Option<TraceFormat>,
    /// Record cumulative regret every this many rounds (plus a log grid and T).
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Experiment config JSON; the other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LowerBoundArgs {
    #[arg(long)]
    instance: String,
    #[arg(long = "T")]
    horizon: u64,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    per_decade: u32,
}

#[derive(Args)]
struct DiagArgs {
    #[arg(long)]
    k: f64,
    #[arg(long = "T", default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 200)]
    runs: u64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the regret trace here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KsArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    seed: SeedArg,
}

fn load_instance(spec: &str) -> Result<BanditInstance> {
    if let Some(instance) = BanditInstance::builtin(spec) {
        return Ok(instance);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "{spec:?} is neither a built-in instance ({}) nor an existing file",
            BanditInstance::BUILTIN_NAMES.join(", ")
        );
    }
    Ok(BanditInstance::load(path)?)
}

fn execute(config: &ExperimentConfig, workers: Option<usize>) -> Result<RegretTrace> {
    let trace = match workers {
        Some(w) => run_experiment_with_workers(config, w)?,
        None => run_experiment(config)?,
    };
    Ok(trace)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(
                serde_json::from_str::<ExperimentConfig>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None => None,
    };
    let instance = match (&args.instance, &base) {
        (Some(spec), _) => load_instance(spec)?,
        (None, Some(c)) => c.instance.clone(),
        (None, None) => bail!("--instance is required"),
    };
    let policy = match (&args.policy, &base) {
        (Some(spec), _) => PolicyConfig::parse(spec, instance.model())?,
        (None, Some(c)) => c.policy,
        (None, None) => bail!("--policy is required"),
    };
    let pick = |flag: Option<u64>, from: Option<u64>, name: &str| {
        flag.or(from).with_context(|| format!("--{name} is required"))
    };
    let horizon = pick(args.horizon, base.as_ref().map(|c| c.horizon), "T")?;
    let runs = pick(args.runs, base.as_ref().map(|c| c.runs), "runs")?;
    let seed = args.seed.seed.or(base.as_ref().map(|c| c.master_seed)).unwrap_or(0);
    let mut config = ExperimentConfig::new(instance, policy, horizon, runs, seed);
    config.diagnostic = base.as_ref().and_then(|c| c.diagnostic);
    if let Some(stride) = args.stride.or(base.as_ref().map(|c| c.record_stride)) {
        config.record_stride = stride;
    }

    let trace = execute(&config, args.workers)?;
    let format = args.format.unwrap_or_else(|| TraceFormat::from_path(&args.out));
    let result = ExperimentResult { config, trace };
    write_trace(&result, &args.out, format)?;
    let c = &result.config;
    println!(
        "{} on {} instance, T={} runs={} seed={}: final regret {:.4} ± {:.4}{}",
        c.policy.spec_string(),
        c.instance.model(),
        c.horizon,
        c.runs,
        c.master_seed,
        result.trace.final_mean(),
        result.trace.final_stderr(),
        if c.policy.known_suboptimal() { " (known suboptimal prior)" } else { "" }
    );
    Ok(())
}

fn cmd_lower_bound(args: LowerBoundArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    if args.horizon == 0 {
        bail!("--T must be >= 1");
    }
    let grid: Vec<f64> = log_grid(args.horizon, args.per_decade.max(1))
        .into_iter()
        .map(|t| t as f64)
        .collect();
    let curve = lb_curve(&instance, &grid)?;
    let mut csv = String::from("t,bound\n");
    for (t, b) in curve.t_grid.iter().zip(&curve.values) {
        csv.push_str(&format!("{t},{b}\n"));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "lower-bound coefficient {:.6}; bound at T={}: {:.4}",
                lb_coefficient(&instance),
                args.horizon,
                curve.values.last().copied().unwrap_or(0.0)
            );
        }
        None => io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_diag_theorem2(args: DiagArgs) -> Result<()> {
    if args.horizon < 200 {
        bail!("--T must be at least 200 to fit over [T/100, T]");
    }
    let instance = BanditInstance::theorem2_pair();
    let policy = PolicyConfig::parse(&format!("ts:k={}", args.k), instance.model())?;
    let config = ExperimentConfig::new(instance, policy, args.horizon, args.runs, args.seed.value())
        .with_diagnostic(Diagnostic::Theorem2);
    let trace = execute(&config, args.workers)?;
    let (lo, hi) = (args.horizon / 100, args.horizon);
    let exponent = fit_growth_exponent(&trace, lo, hi)?;
    let per_log = trace.final_mean() / (args.horizon as f64).ln();
    // k > 1: polynomial regime; k < 1: logarithmic regime; k = 1: report only.
    let verdict = if args.k > 1.0 {
        format!("expected >= 0.4: {}", if exponent >= 0.4 { "PASS" } else { "FAIL" })
    } else if args.k < 1.0 {
        format!("expected <= 0.2: {}", if exponent <= 0.2 { "PASS" } else { "FAIL" })
    } else {
        "no threshold for k = 1".to_string()
    };
    println!(
        "TS(k={}) vs Dirac arm, T={} runs={}: growth exponent over [{lo}, {hi}] = {exponent:.4} ({verdict}); Reg(T)/log T = {per_log:.4} ± {:.4}",
        args.k,
        args.horizon,
        args.runs,
        trace.final_stderr() / (args.horizon as f64).ln()
    );
    if let Some(path) = &args.out {
        let result = ExperimentResult { config, trace };
        write_trace(&result, path, TraceFormat::from_path(path))?;
    }
    Ok(())
}

fn cmd_ks_check(args: KsArgs) -> Result<()> {
    let report = check_samplers(args.samples, args.seed.value())?;
    println!("samples={} seed={}", report.samples, report.seed);
    for check in &report.checks {
        println!(
            "{:<5} {:<32} {:.6} (threshold {:.6})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.statistic,
            check.threshold
        );
    }
    println!("{}", if report.all_passed() { "all checks passed" } else { "some checks failed" });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::LowerBound(args) => cmd_lower_bound(args),
        Command::DiagTheorem2(args) => cmd_diag_theorem2(args),
        Command::KsCheck(args) => cmd_ks_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
