//! Run configuration: env-dependent defaults, JSON file loading and CLI
//! overrides (flags > file > defaults), with strict validation.

use crate::HarnessError;
use curio_env::RewardMode;
use curio_rl::{Algo, NetPreset};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Reacher,
    Grasper,
}

impl std::str::FromStr for EnvKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reacher" => Ok(EnvKind::Reacher),
            "grasper" => Ok(EnvKind::Grasper),
            other => Err(format!("unknown env {other:?} (expected reacher|grasper)")),
        }
    }
}

/// Fully resolved run configuration. Serializes to the flat JSON schema used
/// by config files and run snapshots; CLI flags mirror these keys exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvKind,
    pub reward: RewardMode,
    pub algo: Algo,
    pub cmc: bool,
    pub preset: NetPreset,
    pub seed: u64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub horizon: usize,
    pub plan_iters: usize,
    pub alpha_plan: f64,
    pub target_return: f64,
    pub sigma: usize,
    pub lag: usize,
    pub decay: f64,
    pub initial_lp: f64,
    pub gamma: f64,
    pub tau: f64,
    pub lambda_rec: f64,
    pub lambda_critic: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub lr_model: f64,
    pub minibatch: usize,
    pub n_ac: usize,
    pub n_model: usize,
    pub buffer_capacity: usize,
    pub latent_dim: usize,
    pub noise_std: f64,
    pub max_step: f64,
    pub reencode_latents: bool,
}

/// Partial configuration: any subset of RunConfig's keys. Unknown keys are
/// rejected with the offending name.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigOverrides {
    pub env: Option<EnvKind>,
    pub reward: Option<RewardMode>,
    pub algo: Option<Algo>,
    pub cmc: Option<bool>,
    pub preset: Option<NetPreset>,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub steps_per_episode: Option<usize>,
    pub horizon: Option<usize>,
    pub plan_iters: Option<usize>,
    pub alpha_plan: Option<f64>,
    pub target_return: Option<f64>,
    pub sigma: Option<usize>,
    pub lag: Option<usize>,
    pub decay: Option<f64>,
    pub initial_lp: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub lambda_rec: Option<f64>,
    pub lambda_critic: Option<f64>,
    pub lr_critic: Option<f64>,
    pub lr_actor: Option<f64>,
    pub lr_model: Option<f64>,
    pub minibatch: Option<usize>,
    pub n_ac: Option<usize>,
    pub n_model: Option<usize>,
    pub buffer_capacity: Option<usize>,
    pub latent_dim: Option<usize>,
    pub noise_std: Option<f64>,
    pub max_step: Option<f64>,
    pub reencode_latents: Option<bool>,
}

/// Desk-scale defaults with the scale-independent published values
/// (gamma 0.99, tau 1e-3, lambda_rec 0.1, lambda_critic 1, D 0.1, sigma 40,
/// W 20, H 3, K 10, R* 1, learning rates 1e-3/1e-4/1e-3, noise std 1,
/// action scale 20 degrees).
pub fn default_config(env: EnvKind, preset: NetPreset) -> RunConfig {
    let (episodes, latent_dim, minibatch, n_ac, n_model, buffer) = match preset {
        NetPreset::Desk => {
            let episodes = match env {
                EnvKind::Reacher => 1500,
                EnvKind::Grasper => 2500,
            };
            (episodes, 8, 8, 1, 2, 20_000)
        }
        NetPreset::Paper => (10_000, 32, 256, 15, 10, 100_000),
    };
    RunConfig {
        env,
        reward: RewardMode::Sparse,
        algo: Algo::Cacla,
        cmc: true,
        preset,
        seed: 0,
        episodes,
        steps_per_episode: match preset {
            NetPreset::Desk => 30,
            NetPreset::Paper => 50,
        },
        horizon: 3,
        plan_iters: 10,
        alpha_plan: 0.05,
        target_return: 1.0,
        sigma: 40,
        lag: 20,
        decay: 0.1,
        initial_lp: -1.0,
        gamma: 0.99,
        tau: 1e-3,
        lambda_rec: 0.1,
        lambda_critic: 1.0,
        lr_critic: 1e-3,
        lr_actor: 1e-4,
        lr_model: 1e-3,
        minibatch,
        n_ac,
        n_model,
        buffer_capacity: buffer,
        latent_dim,
        noise_std: 1.0,
        max_step: 20.0,
        reencode_latents: false,
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        take!(
            env, reward, algo, cmc, preset, seed, episodes, steps_per_episode, horizon,
            plan_iters, alpha_plan, target_return, sigma, lag, decay, initial_lp, gamma, tau,
            lambda_rec, lambda_critic, lr_critic, lr_actor, lr_model, minibatch, n_ac, n_model,
            buffer_capacity, latent_dim, noise_std, max_step, reencode_latents,
        );
    }

    /// Observation extents [H, W, C] implied by the env and preset.
    pub fn image_shape(&self) -> [usize; 3] {
        match (self.env, self.preset) {
            (EnvKind::Reacher, NetPreset::Desk) => [32, 32, 3],
            (EnvKind::Grasper, NetPreset::Desk) => [16, 32, 3],
            (EnvKind::Reacher, NetPreset::Paper) => [84, 84, 3],
            (EnvKind::Grasper, NetPreset::Paper) => [32, 64, 3],
        }
    }

    pub fn action_dim(&self) -> usize {
        match self.env {
            EnvKind::Reacher => 3,
            EnvKind::Grasper => 2,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |key: &str, msg: &str| {
            Err(HarnessError::Config(format!("field '{key}': {msg}")))
        };
        if self.episodes < 1 {
            return fail("episodes", "must be >= 1");
        }
        if self.steps_per_episode < 1 {
            return fail("steps_per_episode", "must be >= 1");
        }
        if self.horizon < 1 {
            return fail("horizon", "must be >= 1");
        }
        if self.plan_iters < 1 {
            return fail("plan_iters", "must be >= 1");
        }
        if !(self.alpha_plan > 0.0) {
            return fail("alpha_plan", "must be > 0");
        }
        if self.sigma < 1 {
            return fail("sigma", "must be >= 1");
        }
        if self.lag < 1 {
            return fail("lag", "must be >= 1");
        }
        if !(self.decay > 0.0) {
            return fail("decay", "must be > 0");
        }
        if !(self.initial_lp < 0.0) {
            return fail("initial_lp", "must be < 0");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma", "must be in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau", "must be in (0, 1]");
        }
        if self.lambda_rec < 0.0 || self.lambda_critic < 0.0 {
            return fail("lambda_rec/lambda_critic", "must be >= 0");
        }
        for (key, v) in [
            ("lr_critic", self.lr_critic),
            ("lr_actor", self.lr_actor),
            ("lr_model", self.lr_model),
        ] {
            if !(v > 0.0) {
                return fail(key, "must be > 0");
            }
        }
        if self.minibatch < 1 {
            return fail("minibatch", "must be >= 1");
        }
        if self.buffer_capacity < self.minibatch {
            return fail("buffer_capacity", "must be >= minibatch");
        }
        if self.latent_dim < 1 {
            return fail("latent_dim", "must be >= 1");
        }
        if self.noise_std < 0.0 {
            return fail("noise_std", "must be >= 0");
        }
        if !(self.max_step > 0.0) {
            return fail("max_step", "must be > 0");
        }
        let [h, w, _] = self.image_shape();
        if h % 4 != 0 || w % 4 != 0 {
            return fail("preset", "image extents must be divisible by 4");
        }
        Ok(())
    }
}

/// Parses overrides from a JSON file; unknown keys are rejected with the
/// offending key named by serde.
pub fn overrides_from_file(path: &Path) -> Result<ConfigOverrides, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("invalid config {}: {e}", path.display())))
}

/// defaults(env, preset) <- file <- cli, then validation.
///
/// The env and preset govern the defaults, so they are resolved first from
/// the strongest source that names them.
pub fn resolve_config(
    file: Option<&ConfigOverrides>,
    cli: &ConfigOverrides,
) -> Result<RunConfig, HarnessError> {
    let env = cli
        .env
        .or(file.and_then(|f| f.env))
        .unwrap_or(EnvKind::Reacher);
    let preset = cli
        .preset
        .or(file.and_then(|f| f.preset))
        .unwrap_or(NetPreset::Desk);
    let mut cfg = default_config(env, preset);
    if let Some(f) = file {
        cfg.apply(f);
    }
    cfg.apply(cli);
    cfg.validate()?;
    Ok(cfg)
}
