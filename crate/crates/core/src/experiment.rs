//! Train, evaluate and benchmark commands, and their CSV outputs.
//!
//! Every CSV starts with one `# schema: <name> v<version>` comment line
//! followed by a header row. Schemas:
//!
//! - `learning_curve v1` (`<policy>_learning_curve.csv`): `run,agent_id,mean_reward,loss,entropy,mean_sum_rate_bps`
//! - `metrics v1`: `scenario,policy,tau_c,deployment,step,sum_rate_bps,load_0..load_{M-1}`,
//!   one row per (step, deployment); `tau_c` is empty for non-centralized
//!   policies and steps count from 1.
//! - `trace v1`: `scenario,policy,tau_c,step,mean_sum_rate_bps`, the mean
//!   over deployments. With a single deployment the last column is
//!   `sum_rate_bps` since nothing is averaged.
//! - `bars v1`: `scenario,policy,tau_c,deployments,horizon,mean_sum_rate_bps,final_sum_rate_bps`,
//!   where the final value averages the last `min(20, horizon)` slots.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::baselines::{BenchmarkConfig, CentralizedController, RandomController};
use crate::checkpoint;
use crate::config::{ExperimentConfig, PolicyName, Scenario};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::policy::PolicyNet;
use crate::rng::derive_seed;
use crate::trainer::{evaluate, train_with_progress, EvalResult, PolicyController, TrainOutput};

const FINAL_WINDOW: usize = 20;

/// Master-seed streams of the pipeline stages.
const TRAIN_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: PathBuf, schema: &str, header: &[String]) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(file, "# schema: {schema}").map_err(|e| Error::io(&path, e))?;
        let mut out = Self { writer: csv::Writer::from_writer(file), path };
        out.row(header)?;
        Ok(out)
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.writer.write_record(fields).map_err(|e| Error::io(&self.path, e.into()))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub struct TrainReport {
    pub output: TrainOutput,
    pub checkpoint: PathBuf,
    pub curve_csv: PathBuf,
}

/// Trains `config.policy` on `config.scenario`, then writes its checkpoint
/// and learning curve.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainReport> {
    config.validate()?;
    let kind = config.policy.learned_kind().ok_or_else(|| {
        Error::Config(format!("policy {} has nothing to train; choose DUAL_ATTENTION or SA_PPO", config.policy))
    })?;
    let env = config.build_env(config.scenario)?;
    let train_cfg = config.train_config(kind);
    let runs = train_cfg.runs;
    let every = (runs / 20).max(1);
    let output = train_with_progress(&env, &train_cfg, derive_seed(config.seed, TRAIN_STREAM), |run, reward| {
        if (run + 1) % every == 0 || run + 1 == runs {
            log::info!("run {}/{runs}: mean reward {reward:.4}", run + 1);
        }
    })?;

    let path = config.checkpoint_path(config.policy);
    checkpoint::save(&path, &output.policies, checkpoint::config_hash(&train_cfg)?)?;

    let header = strings(&["run", "agent_id", "mean_reward", "loss", "entropy", "mean_sum_rate_bps"]);
    let name = format!("{}_learning_curve.csv", config.policy.as_str().to_ascii_lowercase());
    let mut csv = CsvOut::create(config.out_dir.join(name), "learning_curve v1", &header)?;
    for c in &output.curve {
        csv.row(&[
            c.run.to_string(),
            c.agent_id.to_string(),
            c.mean_reward.to_string(),
            c.loss.to_string(),
            c.entropy.to_string(),
            c.mean_sum_rate_bps.to_string(),
        ])?;
    }
    let curve_csv = csv.finish()?;
    Ok(TrainReport { output, checkpoint: path, curve_csv })
}

/// One evaluated (scenario, policy, tau_c) cell.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub scenario: Scenario,
    pub policy: PolicyName,
    pub tau_c: Option<usize>,
    pub result: EvalResult,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub runs: Vec<PolicyRun>,
    pub files: Vec<PathBuf>,
    /// Policies left out, with the reason.
    pub skipped: Vec<(PolicyName, String)>,
}

impl EvalReport {
    pub fn find(&self, scenario: Scenario, policy: PolicyName, tau_c: Option<usize>) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.scenario == scenario && r.policy == policy && r.tau_c == tau_c)
    }
}

pub fn load_policies(config: &ExperimentConfig, policy: PolicyName) -> Result<Vec<PolicyNet>> {
    let kind = policy
        .learned_kind()
        .ok_or_else(|| Error::Config(format!("{policy} has no checkpoint")))?;
    let hash = checkpoint::config_hash(&config.train_config(kind))?;
    checkpoint::load(&config.checkpoint_path(policy), kind, &config.train.policy, hash)
}

fn run_cells(
    config: &ExperimentConfig,
    env: &Environment,
    scenario: Scenario,
    policy: PolicyName,
    policies: Option<&[PolicyNet]>,
) -> Result<Vec<PolicyRun>> {
    let (n, horizon) = (config.num_deployments, config.horizon);
    let seed = derive_seed(config.seed, EVAL_STREAM);
    let cell = |tau_c, result| PolicyRun { scenario, policy, tau_c, result };
    Ok(match policy {
        PolicyName::DualAttention | PolicyName::SaPpo => {
            let nets = policies.expect("learned policy without parameters").to_vec();
            let make = |_| PolicyController { policies: nets.clone(), greedy: true };
            vec![cell(None, evaluate(env, make, n, horizon, seed)?)]
        }
        PolicyName::Random => vec![cell(None, evaluate(env, |_| RandomController, n, horizon, seed)?)],
        PolicyName::Centralized => {
            let mut out = Vec::new();
            for tau_c in config.tau_c_list() {
                let bench = BenchmarkConfig { tau_c, ..config.bench.clone() };
                let proto = CentralizedController::new(env, bench)?;
                out.push(cell(Some(tau_c), evaluate(env, |_| proto.clone(), n, horizon, seed)?));
            }
            out
        }
    })
}

fn write_outputs(out_dir: &Path, prefix: &str, runs: &[PolicyRun], maps: usize, deployments: usize) -> Result<Vec<PathBuf>> {
    let tau = |r: &PolicyRun| r.tau_c.map(|t| t.to_string()).unwrap_or_default();

    let mut header = strings(&["scenario", "policy", "tau_c", "deployment", "step", "sum_rate_bps"]);
    header.extend((0..maps).map(|i| format!("load_{i}")));
    let mut metrics = CsvOut::create(out_dir.join(format!("{prefix}_metrics.csv")), "metrics v1", &header)?;
    for r in runs {
        for d in &r.result.traces {
            for (t, rate) in d.sum_rate_bps.iter().enumerate() {
                let mut row = vec![
                    r.scenario.to_string(),
                    r.policy.to_string(),
                    tau(r),
                    d.deployment.to_string(),
                    (t + 1).to_string(),
                    rate.to_string(),
                ];
                row.extend(d.load[t].iter().map(|l| l.to_string()));
                metrics.row(&row)?;
            }
        }
    }

    let value_col = if deployments == 1 { "sum_rate_bps" } else { "mean_sum_rate_bps" };
    let header = strings(&["scenario", "policy", "tau_c", "step", value_col]);
    let mut trace = CsvOut::create(out_dir.join(format!("{prefix}_trace.csv")), "trace v1", &header)?;
    for r in runs {
        for (t, v) in r.result.mean_trace().iter().enumerate() {
            trace.row(&[r.scenario.to_string(), r.policy.to_string(), tau(r), (t + 1).to_string(), v.to_string()])?;
        }
    }

    let header = strings(&["scenario", "policy", "tau_c", "deployments", "horizon", "mean_sum_rate_bps", "final_sum_rate_bps"]);
    let mut bars = CsvOut::create(out_dir.join(format!("{prefix}_bars.csv")), "bars v1", &header)?;
    for r in runs.iter().filter(|r| r.result.horizon() > 0) {
        bars.row(&[
            r.scenario.to_string(),
            r.policy.to_string(),
            tau(r),
            r.result.traces.len().to_string(),
            r.result.horizon().to_string(),
            r.result.mean_sum_rate().to_string(),
            r.result.tail_mean_sum_rate(FINAL_WINDOW).to_string(),
        ])?;
    }
    Ok(vec![metrics.finish()?, trace.finish()?, bars.finish()?])
}

/// Evaluates `config.policy` on `config.scenario`. The centralized
/// benchmark is run once per clustering period in the `tau_c` list.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let env = config.build_env(config.scenario)?;
    let policies = match config.policy.learned_kind() {
        Some(_) => Some(load_policies(config, config.policy)?),
        None => None,
    };
    let runs = run_cells(config, &env, config.scenario, config.policy, policies.as_deref())?;
    let files = write_outputs(&config.out_dir, "eval", &runs, env.config.num_maps, config.num_deployments)?;
    Ok(EvalReport { runs, files, skipped: Vec::new() })
}

/// Compares `bench_policies` across `bench_scenarios` and clustering
/// periods. A learned policy whose checkpoint is missing or unusable is
/// skipped with a warning and listed in [`EvalReport::skipped`].
pub fn cmd_bench(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let mut loaded = Vec::new();
    let mut skipped = Vec::new();
    for &policy in &config.bench_policies {
        if policy.learned_kind().is_none() {
            loaded.push((policy, None));
            continue;
        }
        match load_policies(config, policy) {
            Ok(p) => loaded.push((policy, Some(p))),
            Err(e) => {
                log::warn!("skipping {policy}: {e}");
                skipped.push((policy, e.to_string()));
            }
        }
    }
    let mut runs = Vec::new();
    for &scenario in &config.bench_scenarios {
        let env = config.build_env(scenario)?;
        for (policy, nets) in &loaded {
            runs.extend(run_cells(config, &env, scenario, *policy, nets.as_deref())?);
        }
    }
    let files = write_outputs(&config.out_dir, "bench", &runs, config.env.num_maps, config.num_deployments)?;
    Ok(EvalReport { runs, files, skipped })
}
