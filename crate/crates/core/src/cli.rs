//! Command-line front end: `train`, `eval`, `ablate` and `grad-check`.
//!
//! Settings come from an optional config file (`[run]` and `[agent]`
//! sections of `key = value` lines) overlaid by flags. Flags always win.
//! Without a seed from either, `ADC_SEED` is used, then 0.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agent::gradcheck::{run_all, GRAD_TOLERANCE};
use crate::agent::{parse_bool, Ctd3Agent};
use crate::env::EnvId;
use crate::error::{Error, Result};
use crate::harness::{evaluate, run_ablation_seeds, run_training, split_sections, RunConfig, Variant};

/// Environment variable consulted when no seed is given.
pub const SEED_ENV_VAR: &str = "ADC_SEED";

#[derive(Debug, Parser)]
#[command(name = "ctd3", version, about = "Actor-director-critic TD3 training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one agent and write metrics, the echoed config and a checkpoint.
    Train(RunArgs),
    /// Evaluate a checkpoint's deterministic policy.
    Eval(EvalArgs),
    /// Run the TD3 / TD3+ADCF / TD3+IDEM / CTD3 arms and a summary table.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated seeds; defaults to the single run seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Check every analytic gradient against central finite differences.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file with `[run]` / `[agent]` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, value_parser = bool_flag)]
    adcf: Option<bool>,
    #[arg(long, value_parser = bool_flag)]
    idem: Option<bool>,
    /// Reward cutoff separating high- from low-quality transitions.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    env: String,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    /// Seed of the evaluation episodes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn bool_flag(s: &str) -> std::result::Result<bool, String> {
    parse_bool("flag", s).map_err(|e| e.to_string())
}

impl RunArgs {
    /// Merges file, flags and `ADC_SEED` into a validated config.
    fn resolve(&self, default_out: impl Fn(&RunConfig) -> PathBuf) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let (mut run, agent) = split_sections(&text)?;
        let mut push = |k: &str, v: String| run.push((k.to_string(), v));
        if let Some(env) = &self.env {
            push("env", env.clone());
        }
        if let Some(s) = self.seed {
            push("seed", s.to_string());
        }
        if let Some(steps) = self.steps {
            push("steps", steps.to_string());
        }
        if let Some(out) = &self.out {
            push("out_dir", out.display().to_string());
        }
        if !run.iter().any(|(k, _)| k == "seed") {
            if let Ok(s) = std::env::var(SEED_ENV_VAR) {
                run.insert(0, ("seed".to_string(), s));
            }
        }

        let mut cfg = RunConfig::from_entries(&run, &agent)?;
        if let Some(v) = self.adcf {
            cfg.agent.adcf = v;
        }
        if let Some(v) = self.idem {
            cfg.agent.idem = v;
        }
        if let Some(v) = self.cutoff {
            cfg.agent.cutoff = v;
        }
        if cfg.out_dir.is_none() {
            cfg.out_dir = Some(default_out(&cfg));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn train(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.resolve(|c| PathBuf::from(format!("runs/{}-seed{}", c.env, c.seed)))?;
    let dir = cfg.out_dir.clone().expect("resolved");
    let result = run_training(&cfg)?;
    let last = result.rows.last().map_or(f64::NAN, |r| r.return_smooth);
    let _ = writeln!(out, "final smoothed return {last:.4}");
    let _ = writeln!(out, "metrics: {}", dir.join("metrics.csv").display());
    let _ = writeln!(out, "checkpoint: {}", dir.join("agent.ckpt").display());
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let env: EnvId = args.env.parse()?;
    let agent = Ctd3Agent::load(Path::new(&args.checkpoint), &env.spec())?;
    let mean = evaluate(agent.actor(), env, args.episodes, args.seed)?;
    let _ = writeln!(out, "{mean:.17e}");
    Ok(())
}

fn ablate(args: &RunArgs, seeds: Option<&[u64]>, out: &mut dyn Write) -> Result<()> {
    let cfg = args.resolve(|c| PathBuf::from(format!("runs/ablate-{}", c.env)))?;
    let seeds = seeds.map_or_else(|| vec![cfg.seed], <[u64]>::to_vec);
    let summary = run_ablation_seeds(&cfg, &seeds)?;
    for v in Variant::ALL {
        match summary.median_final(v) {
            Some(m) => {
                let _ = writeln!(out, "{:<9} median final smoothed return {m:.4}", v.name());
            }
            None => {
                let _ = writeln!(out, "{:<9} no successful seeds", v.name());
            }
        }
    }
    for arm in summary.failures() {
        let _ = writeln!(out, "{} seed {} failed: {}", arm.variant, arm.seed, arm.result.as_ref().unwrap_err());
    }
    let dir = cfg.out_dir.expect("resolved");
    let _ = writeln!(out, "summary: {}", dir.join("summary.csv").display());
    if summary.failures().next().is_some() {
        return Err(Error::config("ablate", "at least one arm failed"));
    }
    Ok(())
}

fn grad_check(instances: usize, seed: u64, out: &mut dyn Write) -> Result<bool> {
    let reports = run_all(instances, seed)?;
    let mut worst = 0.0f64;
    for r in &reports {
        let _ = writeln!(out, "{r}");
        worst = if r.max_relative_error.is_nan() { f64::NAN } else { worst.max(r.max_relative_error) };
    }
    let ok = worst <= GRAD_TOLERANCE;
    let _ = writeln!(out, "max relative error {worst:.3e} (tolerance {GRAD_TOLERANCE:e})");
    Ok(ok)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status: 0 on success, 1 on failure, 2 on usage errors.
pub fn run_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Ablate { run, seeds } => ablate(run, seeds.as_deref(), out),
        Command::GradCheck { instances, seed } => match grad_check(*instances, *seed, out) {
            Ok(true) => Ok(()),
            Ok(false) => {
                let _ = writeln!(err, "error: gradient check exceeded tolerance");
                return 1;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// [`run_with`] on the process arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
