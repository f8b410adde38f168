//! Run execution and file outputs: per-seed metrics CSVs, config snapshots,
//! run summaries and the cross-seed aggregate curve.

use crate::config::{EnvKind, RunConfig};
use crate::HarnessError;
use curio_env::{EnvConfig, Environment, PixelGrasper, PixelReacher};
use curio_rl::{
    build_learner, Controller, ControllerConfig, Counters, Curiosity, DynamicsModel,
    EpisodeMetrics, LearnerConfig, PlannerConfig, RunResult, StepTrace, DYNAMICS_HIDDEN,
};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exact header of every per-run metrics CSV; tests pin this string.
pub const METRICS_HEADER: &str =
    "episode,return_ext,success,mb_fraction,mean_e_prd,mean_LP,mean_r_int,loss_critic,loss_rec,loss_model";

/// Smoothing window of the aggregate return curve, documented in its header.
pub const SMOOTH_WINDOW: usize = 100;

/// Episode window for "final return" summary statistics.
pub const FINAL_WINDOW: usize = 300;

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub episodes: usize,
    pub final_window: usize,
    pub final_window_mean_return: f64,
    pub final_1000_mean_return: f64,
    pub success_count: usize,
    pub wall_clock_seconds: f64,
    pub counters: Counters,
}

pub struct RunOutput {
    pub metrics: Vec<EpisodeMetrics>,
    pub counters: Counters,
    pub trace: Vec<StepTrace>,
    pub wall_seconds: f64,
}

fn controller_config(cfg: &RunConfig, collect_trace: bool) -> ControllerConfig {
    ControllerConfig {
        algo: cfg.algo,
        cmc: cfg.cmc,
        planner: PlannerConfig {
            horizon: cfg.horizon,
            iterations: cfg.plan_iters,
            update_rate: cfg.alpha_plan,
            target_return: cfg.target_return,
        },
        noise_std: cfg.noise_std,
        minibatch: cfg.minibatch,
        n_ac: cfg.n_ac,
        n_model: cfg.n_model,
        warmup: cfg.minibatch,
        episodes: cfg.episodes,
        seed: cfg.seed,
        reencode_latents: cfg.reencode_latents,
        collect_trace,
    }
}

fn env_config(cfg: &RunConfig) -> EnvConfig {
    let [h, w, c] = cfg.image_shape();
    EnvConfig {
        image_height: h,
        image_width: w,
        channels: c,
        reward_mode: cfg.reward,
        episode_length: cfg.steps_per_episode,
        max_step: cfg.max_step,
        seed: cfg.seed,
    }
}

fn run_with_env<E: Environment>(
    env: E,
    cfg: &RunConfig,
    collect_trace: bool,
) -> Result<(RunResult, Controller<E>), HarnessError> {
    let learner = build_learner(
        cfg.preset,
        cfg.image_shape(),
        cfg.latent_dim,
        cfg.action_dim(),
        LearnerConfig {
            gamma: cfg.gamma,
            tau: cfg.tau,
            lambda_rec: cfg.lambda_rec,
            lambda_critic: cfg.lambda_critic,
            lr_critic: cfg.lr_critic,
            lr_actor: cfg.lr_actor,
        },
        cfg.seed,
    )?;
    let dynamics = DynamicsModel::new(
        cfg.latent_dim,
        cfg.action_dim(),
        DYNAMICS_HIDDEN,
        cfg.lr_model,
        cfg.seed.wrapping_add(5),
    );
    let curiosity = Curiosity::new(cfg.sigma, cfg.lag, cfg.initial_lp, cfg.decay);
    let mut controller = Controller::new(
        env,
        learner,
        dynamics,
        curiosity,
        cfg.buffer_capacity,
        controller_config(cfg, collect_trace),
    );
    let result = controller.run()?;
    Ok((result, controller))
}

/// Builds the environment and all networks from the config and executes the
/// full run. Optionally saves network checkpoints under `checkpoint_dir`.
pub fn execute_run(
    cfg: &RunConfig,
    collect_trace: bool,
    checkpoint_dir: Option<&Path>,
) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    crate::tune_allocator();
    let started = Instant::now();
    let (result, learner_checkpoint) = match cfg.env {
        EnvKind::Reacher => {
            let env = PixelReacher::new(env_config(cfg)).map_err(HarnessError::Config)?;
            let (result, controller) = run_with_env(env, cfg, collect_trace)?;
            if let Some(dir) = checkpoint_dir {
                controller.learner.save_checkpoints(dir)?;
                controller
                    .dynamics
                    .net()
                    .save_checkpoint(dir.join("dynamics.json"))
                    .map_err(curio_rl::RlError::from)?;
            }
            (result, ())
        }
        EnvKind::Grasper => {
            let env = PixelGrasper::new(env_config(cfg)).map_err(HarnessError::Config)?;
            let (result, controller) = run_with_env(env, cfg, collect_trace)?;
            if let Some(dir) = checkpoint_dir {
                controller.learner.save_checkpoints(dir)?;
                controller
                    .dynamics
                    .net()
                    .save_checkpoint(dir.join("dynamics.json"))
                    .map_err(curio_rl::RlError::from)?;
            }
            (result, ())
        }
    };
    let _ = learner_checkpoint;
    Ok(RunOutput {
        metrics: result.episodes,
        counters: result.counters,
        trace: result.trace,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn write_metrics_csv(path: &Path, metrics: &[EpisodeMetrics]) -> Result<(), HarnessError> {
    let mut out = String::with_capacity(64 * metrics.len() + 128);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            m.episode,
            m.return_ext,
            u8::from(m.success),
            m.mb_fraction,
            m.mean_e_prd,
            m.mean_lp,
            m.mean_r_int,
            m.loss_critic,
            m.loss_rec,
            m.loss_model
        ));
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(e.to_string()))
}

/// Reads one named column back out of a metrics CSV.
pub fn read_metrics_column(path: &Path, column: &str) -> Result<Vec<f64>, HarnessError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Report(format!("{} is empty", path.display())))?;
    let idx = header
        .split(',')
        .position(|h| h == column)
        .ok_or_else(|| {
            HarnessError::Report(format!("{} lacks column {column:?}", path.display()))
        })?;
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        let field = line.split(',').nth(idx).ok_or_else(|| {
            HarnessError::Report(format!("{} row {ln} lacks column {idx}", path.display()))
        })?;
        values.push(field.parse::<f64>().map_err(|e| {
            HarnessError::Report(format!("{} row {ln}: {e}", path.display()))
        })?);
    }
    Ok(values)
}

/// Mean +- std of the extrinsic return per episode across seeds, plus a
/// trailing-window smoothed mean curve.
pub fn write_aggregate_csv(path: &Path, runs: &[&[EpisodeMetrics]]) -> Result<(), HarnessError> {
    assert!(!runs.is_empty());
    let episodes = runs[0].len();
    for r in runs {
        assert_eq!(r.len(), episodes, "all seed runs must have equal length");
    }
    let n = runs.len() as f64;
    let mut out = String::new();
    out.push_str(&format!("# smoothing_window={SMOOTH_WINDOW}\n"));
    out.push_str("episode,return_mean,return_std,return_mean_smooth\n");
    let means: Vec<f64> = (0..episodes)
        .map(|e| runs.iter().map(|r| r[e].return_ext).sum::<f64>() / n)
        .collect();
    for e in 0..episodes {
        let mean = means[e];
        let var = runs
            .iter()
            .map(|r| (r[e].return_ext - mean).powi(2))
            .sum::<f64>()
            / n;
        let lo = e + 1 - SMOOTH_WINDOW.min(e + 1);
        let smooth = means[lo..=e].iter().sum::<f64>() / (e - lo + 1) as f64;
        out.push_str(&format!("{e},{mean},{},{smooth}\n", var.sqrt()));
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(e.to_string()))
}

/// Mean extrinsic return over the final `window` episodes.
pub fn final_window_mean(metrics: &[EpisodeMetrics], window: usize) -> f64 {
    let w = window.min(metrics.len()).max(1);
    metrics[metrics.len() - w..]
        .iter()
        .map(|m| m.return_ext)
        .sum::<f64>()
        / w as f64
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed{seed}"))
}

pub struct ExperimentOutput {
    pub per_seed: Vec<(u64, RunOutput)>,
}

/// Runs one configuration across several seeds (a bounded pool of worker
/// threads; each run is sealed and single-threaded) and writes, per seed,
/// `metrics.csv`, `config.json` and `summary.json`, plus one `aggregate.csv`.
/// A failed seed is recorded in `failures.json`; the other seeds continue.
pub fn run_experiment(
    cfg: &RunConfig,
    seeds: &[u64],
    out_dir: &Path,
    max_parallel: usize,
) -> Result<ExperimentOutput, HarnessError> {
    assert!(!seeds.is_empty(), "need at least one seed");
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(e.to_string()))?;

    let mut results: Vec<Option<Result<RunOutput, HarnessError>>> =
        (0..seeds.len()).map(|_| None).collect();
    let chunk = max_parallel.max(1);
    for batch in (0..seeds.len()).collect::<Vec<_>>().chunks(chunk) {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for &i in batch {
                let mut run_cfg = cfg.clone();
                run_cfg.seed = seeds[i];
                handles.push((i, scope.spawn(move || execute_run(&run_cfg, false, None))));
            }
            for (i, h) in handles {
                results[i] = Some(h.join().expect("run thread must not panic"));
            }
        });
    }

    let mut per_seed = Vec::new();
    let mut failures: Vec<(u64, String)> = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        let seed = seeds[i];
        match result.expect("filled above") {
            Ok(output) => {
                let dir = seed_dir(out_dir, seed);
                std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io(e.to_string()))?;
                write_metrics_csv(&dir.join("metrics.csv"), &output.metrics)?;
                let mut snapshot = cfg.clone();
                snapshot.seed = seed;
                std::fs::write(
                    dir.join("config.json"),
                    serde_json::to_string_pretty(&snapshot)
                        .map_err(|e| HarnessError::Io(e.to_string()))?,
                )
                .map_err(|e| HarnessError::Io(e.to_string()))?;
                let summary = RunSummary {
                    episodes: output.metrics.len(),
                    final_window: FINAL_WINDOW,
                    final_window_mean_return: final_window_mean(&output.metrics, FINAL_WINDOW),
                    final_1000_mean_return: final_window_mean(&output.metrics, 1000),
                    success_count: output.metrics.iter().filter(|m| m.success).count(),
                    wall_clock_seconds: output.wall_seconds,
                    counters: output.counters,
                };
                std::fs::write(
                    dir.join("summary.json"),
                    serde_json::to_string_pretty(&summary)
                        .map_err(|e| HarnessError::Io(e.to_string()))?,
                )
                .map_err(|e| HarnessError::Io(e.to_string()))?;
                per_seed.push((seed, output));
            }
            Err(e) => failures.push((seed, e.to_string())),
        }
    }

    if !failures.is_empty() {
        let report: Vec<serde_json::Value> = failures
            .iter()
            .map(|(seed, err)| serde_json::json!({"seed": seed, "error": err}))
            .collect();
        std::fs::write(
            out_dir.join("failures.json"),
            serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))?,
        )
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    if per_seed.is_empty() {
        return Err(HarnessError::Report("every seed failed".into()));
    }

    let runs: Vec<&[EpisodeMetrics]> = per_seed.iter().map(|(_, o)| o.metrics.as_slice()).collect();
    write_aggregate_csv(&out_dir.join("aggregate.csv"), &runs)?;
    Ok(ExperimentOutput { per_seed })
}

/// Writes a controller step trace as newline-delimited JSON.
pub fn write_trace_ndjson(path: &Path, trace: &[StepTrace]) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    for record in trace {
        let line = serde_json::to_string(record).map_err(|e| HarnessError::Io(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(())
}
