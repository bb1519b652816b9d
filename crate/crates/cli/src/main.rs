//! `dualmap` command line: train, evaluate and benchmark MAP trajectory
//! controllers. Flags override values from the config file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dualmap::config::{ExperimentConfig, PolicyName, Scenario};
use dualmap::experiment::{cmd_bench, cmd_eval, cmd_train, EvalReport};

#[derive(Parser)]
#[command(name = "dualmap", version, about = "Multi-agent MAP trajectory control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a learned policy and write its checkpoint and learning curve.
    Train(Overrides),
    /// Evaluate one policy over random deployments.
    Eval(Overrides),
    /// Compare policies and clustering periods across scenarios.
    Bench(Overrides),
    /// Print the effective configuration as TOML.
    Config(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// DUAL_ATTENTION, SA_PPO, CENTRALIZED or RANDOM. For `bench`, a
    /// comma-separated list.
    #[arg(long)]
    policy: Option<String>,
    /// Comma-separated clustering periods, e.g. `1,10,200`.
    #[arg(long, value_delimiter = ',')]
    tau_c: Option<Vec<usize>>,
    /// STATIC_UE or MOVING_UE. For `bench`, a comma-separated list.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    deployments: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Checkpoint path for the selected learned policy.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Number of training runs.
    #[arg(long)]
    runs: Option<usize>,
}

fn parse_list<T: std::str::FromStr<Err = dualmap::Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| Ok(p.parse::<T>()?)).collect()
}

impl Overrides {
    fn resolve(&self, bench: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.policy {
            if bench {
                cfg.bench_policies = parse_list(v)?;
            } else {
                cfg.policy = v.parse()?;
            }
        }
        if let Some(v) = &self.tau_c {
            cfg.tau_c = v.clone();
        }
        if let Some(v) = &self.scenario {
            if bench {
                cfg.bench_scenarios = parse_list::<Scenario>(v)?;
            } else {
                cfg.scenario = v.parse()?;
            }
        }
        if let Some(v) = self.deployments {
            cfg.num_deployments = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = &self.checkpoint {
            cfg.checkpoint = Some(v.clone());
        }
        if let Some(v) = self.runs {
            cfg.train.runs = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(report: &EvalReport) {
    for r in &report.runs {
        let tau = r.tau_c.map(|t| format!(" tau_c={t}")).unwrap_or_default();
        println!(
            "{} {}{}: mean sum-rate {:.3} Mbps over {} deployments",
            r.scenario,
            r.policy,
            tau,
            r.result.mean_sum_rate() / 1e6,
            r.result.traces.len()
        );
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(o) => {
            let cfg = o.resolve(false)?;
            let report = cmd_train(&cfg).context("training failed")?;
            let rewards = report.output.run_rewards();
            if let Some(last) = rewards.last() {
                println!("final mean reward {last:.4} after {} runs", rewards.len());
            }
            println!("wrote {}", report.checkpoint.display());
            println!("wrote {}", report.curve_csv.display());
        }
        Command::Eval(o) => {
            let cfg = o.resolve(false)?;
            let report = cmd_eval(&cfg).with_context(|| format!("evaluating {} failed", cfg.policy))?;
            summarize(&report);
        }
        Command::Bench(o) => {
            let cfg = o.resolve(true)?;
            let report = cmd_bench(&cfg).context("benchmark failed")?;
            summarize(&report);
            if !report.skipped.is_empty() {
                let names: Vec<&str> = report.skipped.iter().map(|(p, _)| PolicyName::as_str(*p)).collect();
                bail!("skipped policies without a usable checkpoint: {}", names.join(", "));
            }
        }
        Command::Config(o) => print!("{}", o.resolve(false)?.to_toml_string()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
