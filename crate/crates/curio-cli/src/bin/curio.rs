//! Command-line interface: single runs, the 2x2 ablation, horizon sweeps and
//! model-error reports. Failures exit nonzero with a machine-readable error
//! JSON on stderr.

use clap::{Args, Parser, Subcommand};
use curio_cli::{
    ablation_matrix, default_parallelism, execute_run, horizon_sweep, model_error_report,
    overrides_from_file, resolve_config, seed_dir, write_metrics_csv,
    write_trace_ndjson, ConfigOverrides, EnvKind, RunConfig,
};
use curio_env::RewardMode;
use curio_rl::{Algo, NetPreset};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "curio", about = "Curiosity-gated hybrid control experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by all run-producing subcommands; every flag mirrors a JSON
/// config key and overrides both defaults and the config file.
#[derive(Args, Clone)]
struct CommonFlags {
    /// JSON config file (flat key/value; unknown keys rejected)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,

    /// Maximum concurrent seed runs (default: available cores)
    #[arg(long)]
    max_parallel: Option<usize>,

    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    cmc: Option<bool>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps_per_episode: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    plan_iters: Option<usize>,
    #[arg(long)]
    alpha_plan: Option<f64>,
    #[arg(long)]
    target_return: Option<f64>,
    #[arg(long)]
    sigma: Option<usize>,
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    initial_lp: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda_rec: Option<f64>,
    #[arg(long)]
    lambda_critic: Option<f64>,
    #[arg(long)]
    lr_critic: Option<f64>,
    #[arg(long)]
    lr_actor: Option<f64>,
    #[arg(long)]
    lr_model: Option<f64>,
    #[arg(long)]
    minibatch: Option<usize>,
    #[arg(long)]
    n_ac: Option<usize>,
    #[arg(long)]
    n_model: Option<usize>,
    #[arg(long)]
    buffer_capacity: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    reencode_latents: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single seeded run
    Run {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a per-step trace (newline-delimited JSON)
        #[arg(long, default_value_t = false)]
        trace: bool,
        /// Dump the first observation as a PPM image
        #[arg(long, default_value_t = false)]
        dump_obs: bool,
    },
    /// Run the 2x2 matrix {ddpg, cacla} x {cmc on, off}
    Ablate {
        #[command(flatten)]
        common: CommonFlags,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
    },
    /// Sweep the planning horizon with the meta-controller enabled
    SweepHorizon {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        horizons: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
    },
    /// Derive reports from existing run outputs
    Report {
        /// Report kind (currently: model-error)
        #[arg(long, default_value = "model-error")]
        kind: String,
        /// Experiment cell directory holding seed*/metrics.csv
        #[arg(long)]
        cell_dir: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_enum<T: std::str::FromStr<Err = String>>(
    value: &Option<String>,
) -> Result<Option<T>, String> {
    value.as_deref().map(|s| s.parse()).transpose()
}

fn reward_from_str(s: &str) -> Result<RewardMode, String> {
    match s {
        "dense" => Ok(RewardMode::Dense),
        "sparse" => Ok(RewardMode::Sparse),
        other => Err(format!("unknown reward {other:?} (expected dense|sparse)")),
    }
}

fn algo_from_str(s: &str) -> Result<Algo, String> {
    match s {
        "ddpg" => Ok(Algo::Ddpg),
        "cacla" => Ok(Algo::Cacla),
        other => Err(format!("unknown algo {other:?} (expected ddpg|cacla)")),
    }
}

fn preset_from_str(s: &str) -> Result<NetPreset, String> {
    match s {
        "desk" => Ok(NetPreset::Desk),
        "paper" => Ok(NetPreset::Paper),
        other => Err(format!("unknown preset {other:?} (expected desk|paper)")),
    }
}

fn overrides_from_flags(flags: &CommonFlags, seed: Option<u64>) -> Result<ConfigOverrides, String> {
    Ok(ConfigOverrides {
        env: parse_enum::<EnvKind>(&flags.env)?,
        reward: flags.reward.as_deref().map(reward_from_str).transpose()?,
        algo: flags.algo.as_deref().map(algo_from_str).transpose()?,
        cmc: flags.cmc,
        preset: flags.preset.as_deref().map(preset_from_str).transpose()?,
        seed,
        episodes: flags.episodes,
        steps_per_episode: flags.steps_per_episode,
        horizon: flags.horizon,
        plan_iters: flags.plan_iters,
        alpha_plan: flags.alpha_plan,
        target_return: flags.target_return,
        sigma: flags.sigma,
        lag: flags.lag,
        decay: flags.decay,
        initial_lp: flags.initial_lp,
        gamma: flags.gamma,
        tau: flags.tau,
        lambda_rec: flags.lambda_rec,
        lambda_critic: flags.lambda_critic,
        lr_critic: flags.lr_critic,
        lr_actor: flags.lr_actor,
        lr_model: flags.lr_model,
        minibatch: flags.minibatch,
        n_ac: flags.n_ac,
        n_model: flags.n_model,
        buffer_capacity: flags.buffer_capacity,
        latent_dim: flags.latent_dim,
        noise_std: flags.noise_std,
        max_step: flags.max_step,
        reencode_latents: flags.reencode_latents,
    })
}

fn load(flags: &CommonFlags, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let file = flags
        .config
        .as_deref()
        .map(overrides_from_file)
        .transpose()?;
    let cli = overrides_from_flags(flags, seed).map_err(|e| anyhow::anyhow!(e))?;
    Ok(resolve_config(file.as_ref(), &cli)?)
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        let payload = serde_json::json!({ "error": err.to_string() });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            common,
            seed,
            trace,
            dump_obs,
        } => {
            let cfg = load(&common, Some(seed))?;
            let dir = seed_dir(&common.out_dir, cfg.seed);
            std::fs::create_dir_all(&dir)?;
            let checkpoints = dir.join("checkpoints");
            let output = execute_run(&cfg, trace, Some(&checkpoints))?;
            write_metrics_csv(&dir.join("metrics.csv"), &output.metrics)?;
            std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
            if trace {
                write_trace_ndjson(&dir.join("trace.ndjson"), &output.trace)?;
            }
            if dump_obs {
                dump_first_observation(&cfg, &dir)?;
            }
            let finals = curio_cli::final_window_mean(&output.metrics, curio_cli::FINAL_WINDOW);
            println!(
                "run complete: {} episodes, final-{}-episode mean return {:.4}, {:.1}s",
                output.metrics.len(),
                curio_cli::FINAL_WINDOW,
                finals,
                output.wall_seconds
            );
            Ok(())
        }
        Command::Ablate { common, seeds } => {
            let cfg = load(&common, None)?;
            let parallel = common.max_parallel.unwrap_or_else(default_parallelism);
            let cells = ablation_matrix(&cfg, &seeds, &common.out_dir, parallel)?;
            println!("algo      cmc   median_final");
            for c in &cells {
                println!(
                    "{:<9} {:<5} {:.4}",
                    format!("{:?}", c.algo).to_lowercase(),
                    c.cmc,
                    c.median_final
                );
            }
            Ok(())
        }
        Command::SweepHorizon {
            common,
            horizons,
            seeds,
        } => {
            let mut cfg = load(&common, None)?;
            cfg.cmc = true;
            let parallel = common.max_parallel.unwrap_or_else(default_parallelism);
            let rows = horizon_sweep(&cfg, &horizons, &seeds, &common.out_dir, parallel)?;
            println!("horizon  median_final");
            for r in &rows {
                println!("{:<8} {:.4}", r.horizon, r.median_final);
            }
            Ok(())
        }
        Command::Report { kind, cell_dir, out } => {
            match kind.as_str() {
                "model-error" => {
                    model_error_report(&cell_dir, &out)?;
                    println!("wrote {}", out.display());
                    Ok(())
                }
                other => anyhow::bail!("unknown report kind {other:?} (expected model-error)"),
            }
        }
    }
}

fn dump_first_observation(cfg: &RunConfig, dir: &std::path::Path) -> anyhow::Result<()> {
    use curio_env::{EnvConfig, Environment, PixelGrasper, PixelReacher};
    let [h, w, c] = cfg.image_shape();
    let env_cfg = EnvConfig {
        image_height: h,
        image_width: w,
        channels: c,
        reward_mode: cfg.reward,
        episode_length: cfg.steps_per_episode,
        max_step: cfg.max_step,
        seed: cfg.seed,
    };
    let obs = match cfg.env {
        EnvKind::Reacher => PixelReacher::new(env_cfg)
            .map_err(|e| anyhow::anyhow!(e))?
            .reset_with(0),
        EnvKind::Grasper => PixelGrasper::new(env_cfg)
            .map_err(|e| anyhow::anyhow!(e))?
            .reset_with(0),
    };
    curio_env::write_ppm(&obs, dir.join("obs0.ppm"))?;
    Ok(())
}
