//! Acceptance runner. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs as a plain binary so the lines always show.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{gradients, suites};
use dualmap::channel::{atg_pathloss, gtg_pathloss, los_probability, shannon_rate, ChannelParams};
use dualmap::config::{ExperimentConfig, PolicyName, Scenario};
use dualmap::env::EnvConfig;
use dualmap::experiment::{cmd_bench, cmd_eval, cmd_train, EvalReport};
use dualmap::trainer::ppo::{dual_clip_loss, dual_clip_surrogate};

type Outcome = Result<String, String>;

fn run(id: u32, title: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(check)) {
        Ok(o) => o,
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS [{id}] {title}: {detail} ({secs:.1}s)"),
        Err(detail) => println!("FAIL [{id}] {title}: {detail} ({secs:.1}s)"),
    }
    outcome.is_ok()
}

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn channel_oracles() -> Outcome {
    let map = ChannelParams::map_default();
    let mbs = ChannelParams::mbs_default();
    let atg = atg_pathloss(100.0, &map, 0.0).map_err(|e| e.to_string())?;
    let gtg = gtg_pathloss(100.0, true, &mbs, 0.0).map_err(|e| e.to_string())?;
    let p = los_probability(map.los_alpha, &map);
    let rate = shannon_rate(500e6, 1.0);
    let ok = (atg - 101.39).abs() <= 0.01 && (gtg - 77.72).abs() <= 0.01 && p == 1.0 / (1.0 + map.los_alpha) && rate == 5.0e8;
    require(ok, format!("ATG {atg:.4} dB, GTG {gtg:.4} dB, P_LoS(alpha) {p}, rate {rate:e} bit/s"))
}

fn attention_invariance() -> Outcome {
    suites::permutation_invariance(1000);
    suites::fixed_output_size();
    suites::softmax_normalization(1000);
    Ok("1000 permutations within 1e-12, sizes 0..15 fixed, weights sum to 1 within 1e-9".into())
}

fn gradient_suite() -> Outcome {
    gradients::encoder_gradients();
    gradients::dense_layer_gradients();
    gradients::actor_critic_gradients();
    gradients::end_to_end_ppo_loss_gradients();
    Ok("encoder, trunk/heads, actor-critic and end-to-end within 1e-4 on 100 instances each".into())
}

fn constraint_suite() -> Outcome {
    suites::random_walk(EnvConfig::default(), 1, 10_000);
    let tight = EnvConfig { max_connections: 2, num_ues: 40, centroid_radius_m: 10.0, ..EnvConfig::default() };
    suites::random_walk(tight, 2, 10_000);
    Ok("2 x 10^4 random steps, zero violations of single server, cap, zone and step length".into())
}

fn ppo_traces() -> Outcome {
    let (e1, e2) = (0.01, 0.5);
    let a = dual_clip_loss(-0.7, -0.7, 0.8, e1, e2);
    let b = dual_clip_surrogate(1.5f64.ln(), 0.0, 1.0, e1, e2).0;
    let c = dual_clip_surrogate(3f64.ln(), 0.0, -1.0, e1, e2).0;
    let h = 1e-5;
    let fd = |lp: f64, adv: f64| (dual_clip_loss(lp + h, 0.0, adv, e1, e2) - dual_clip_loss(lp - h, 0.0, adv, e1, e2)) / (2.0 * h);
    let (g_upper, g_floor) = (fd(1.5f64.ln(), 1.0), fd(3f64.ln(), -1.0));
    let ok = a == -0.8 && b == 1.01 && c == -1.5 && g_upper == 0.0 && g_floor == 0.0;
    require(ok, format!("loss(rho=1,A=0.8) {a}, s(A=1,rho=1.5) {b}, s(A=-1,rho=3) {c}, clipped FD grads {g_upper}, {g_floor}"))
}

fn matching_planning() -> Outcome {
    suites::matching_vs_brute_force(100);
    suites::dijkstra_vs_bfs(1000);
    Ok("100 matchings equal brute force, 1000 Dijkstra paths equal BFS".into())
}

fn smoke_config(out: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml");
    let mut cfg = ExperimentConfig::load(&path).expect("smoke config");
    cfg.out_dir = out.to_path_buf();
    cfg
}

struct Pipeline {
    train_time: Duration,
    run_rewards: Vec<f64>,
    bench: EvalReport,
}

/// train -> eval -> bench on the smoke config.
fn pipeline(out: &Path) -> dualmap::Result<Pipeline> {
    let cfg = smoke_config(out);
    let start = Instant::now();
    let trained = cmd_train(&cfg)?;
    let train_time = start.elapsed();
    cmd_eval(&cfg)?;
    let bench = cmd_bench(&cfg)?;
    Ok(Pipeline { train_time, run_rewards: trained.output.run_rewards(), bench })
}

fn learning_smoke(p: &Pipeline) -> Outcome {
    let r = &p.run_rewards;
    if r.len() < 40 {
        return Err(format!("only {} runs", r.len()));
    }
    let first = r[..20].iter().sum::<f64>() / 20.0;
    let last = r[r.len() - 20..].iter().sum::<f64>() / 20.0;
    let secs = p.train_time.as_secs_f64();
    require(
        last > first && last > 0.0 && secs < 600.0,
        format!("M=2 K=8 T_e=50 {} runs: first-20 mean {first:.4}, last-20 mean {last:.4}, trained in {secs:.1}s", r.len()),
    )
}

fn benchmark_ordering(p: &Pipeline) -> Outcome {
    let rate = |policy, tau| {
        p.bench
            .find(Scenario::MovingUe, policy, tau)
            .map(|r| (r.result.mean_sum_rate(), r.result.traces.len()))
            .ok_or_else(|| format!("missing {policy} tau_c={tau:?} under MOVING_UE"))
    };
    let (fresh, n1) = rate(PolicyName::Centralized, Some(1))?;
    let (stale, n2) = rate(PolicyName::Centralized, Some(200))?;
    let (trained, n3) = rate(PolicyName::DualAttention, None)?;
    let (random, n4) = rate(PolicyName::Random, None)?;
    let ratio = trained / random;
    require(
        fresh >= stale && ratio >= 1.5 && [n1, n2, n3, n4].iter().all(|&n| n == 12),
        format!(
            "MOVING_UE over 12 deployments: centralized tau_c=1 {:.1} Mbps vs tau_c=200 {:.1} Mbps; trained {:.1} Mbps = {ratio:.2}x random {:.1} Mbps",
            fresh / 1e6,
            stale / 1e6,
            trained / 1e6,
            random / 1e6
        ),
    )
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    names.into_iter().map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap())).collect()
}

fn reproducibility(first: &Path, second: &Path) -> Outcome {
    pipeline(second).map_err(|e| e.to_string())?;
    let (a, b) = (files(first), files(second));
    let names: Vec<String> = a.iter().map(|(n, _)| n.display().to_string()).collect();
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.0 != y.0) {
        return Err("different file sets".into());
    }
    let differing: Vec<&String> = a.iter().zip(&b).zip(&names).filter(|((x, y), _)| x.1 != y.1).map(|(_, n)| n).collect();
    require(differing.is_empty(), format!("{} files compared ({}), differing: {differing:?}", a.len(), names.join(", ")))
}

fn main() {
    let mut ok = true;
    ok &= run(1, "channel oracles", channel_oracles);
    ok &= run(2, "attention invariance", attention_invariance);
    ok &= run(3, "gradient suite", gradient_suite);
    ok &= run(4, "constraint suite", constraint_suite);
    ok &= run(5, "PPO loss traces", ppo_traces);
    ok &= run(6, "matching and planning oracles", matching_planning);

    let (dir_a, dir_b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match pipeline(dir_a.path()) {
        Ok(p) => {
            ok &= run(7, "learning smoke test", || learning_smoke(&p));
            ok &= run(8, "benchmark ordering", || benchmark_ordering(&p));
        }
        Err(e) => {
            ok &= run(7, "learning smoke test", || Err(format!("pipeline failed: {e}")));
            ok &= run(8, "benchmark ordering", || Err(format!("pipeline failed: {e}")));
        }
    }
    ok &= run(9, "reproducibility", || reproducibility(dir_a.path(), dir_b.path()));

    if !ok {
        std::process::exit(1);
    }
}
