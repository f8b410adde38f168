//! The per-step control loop: arbitration between planner and actor on the
//! sign of the learning progress, exploration noise, reward assembly, replay
//! storage and the per-timestep training schedule.

use crate::curiosity::Curiosity;
use crate::dynamics::DynamicsModel;
use crate::learner::Learner;
use crate::planner::{self, PlannerConfig};
use crate::replay::{ReplayBuffer, Transition};
use crate::RlError;
use curio_env::{Environment, Outcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Ddpg,
    Cacla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    ModelBased,
    ModelFree,
}

/// How one action was chosen.
#[derive(Debug, Clone)]
pub struct ControlDecision {
    pub source: DecisionSource,
    pub lp_used: f64,
    pub pre_noise_action: Vec<f64>,
    pub executed_action: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub algo: Algo,
    /// Master switch: disabled turns the system into the plain off-policy
    /// actor-critic (planner and intrinsic-reward paths unreachable).
    pub cmc: bool,
    pub planner: PlannerConfig,
    pub noise_std: f64,
    pub minibatch: usize,
    pub n_ac: usize,
    pub n_model: usize,
    pub warmup: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Re-encode observations with the current encoder for model training
    /// instead of using the stored collection-time latents.
    pub reencode_latents: bool,
    pub collect_trace: bool,
}

/// Instrumentation counters used by the baseline-equivalence checks.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Counters {
    pub planner_invocations: u64,
    pub intrinsic_reward_uses: u64,
    pub aborted_updates: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub return_ext: f64,
    pub success: bool,
    pub mb_fraction: f64,
    pub mean_e_prd: f64,
    pub mean_lp: f64,
    pub mean_r_int: f64,
    pub loss_critic: f64,
    pub loss_rec: f64,
    pub loss_model: f64,
}

/// Per-step debug record, collected only when `collect_trace` is set.
#[derive(Debug, Clone, Serialize)]
pub struct StepTrace {
    pub t: u64,
    pub episode: usize,
    pub source: DecisionSource,
    pub lp_used: f64,
    pub lp_computed: f64,
    pub reward_ext: f64,
    pub reward_int: f64,
    pub reward: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub episodes: Vec<EpisodeMetrics>,
    pub counters: Counters,
    pub trace: Vec<StepTrace>,
}

struct TickReport {
    ticked: bool,
    critic: f64,
    rec: f64,
    model: f64,
}

pub struct Controller<E: Environment> {
    env: E,
    pub learner: Learner,
    pub dynamics: DynamicsModel,
    pub curiosity: Curiosity,
    buffer: ReplayBuffer,
    cfg: ControllerConfig,
    noise_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    lp_prev: f64,
    global_step: u64,
    pub counters: Counters,
}

impl<E: Environment> Controller<E> {
    pub fn new(
        env: E,
        learner: Learner,
        dynamics: DynamicsModel,
        curiosity: Curiosity,
        buffer_capacity: usize,
        cfg: ControllerConfig,
    ) -> Self {
        let lp_prev = curiosity.learning_progress();
        let noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA076_1D64_78BD_642F);
        let sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xE703_7ED1_A0B4_28DB);
        Self {
            env,
            learner,
            dynamics,
            curiosity,
            buffer: ReplayBuffer::new(buffer_capacity),
            cfg,
            noise_rng,
            sample_rng,
            lp_prev,
            global_step: 0,
            counters: Counters::default(),
        }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// Learning progress value the next decision will arbitrate on.
    pub fn pending_lp(&self) -> f64 {
        self.lp_prev
    }

    #[doc(hidden)]
    pub fn set_pending_lp(&mut self, lp: f64) {
        self.lp_prev = lp;
    }

    /// Planner when the previous step's learning progress is non-negative
    /// (boundary inclusive), actor otherwise. With the meta-controller
    /// disabled the planner branch is unreachable.
    pub fn select_action(&mut self, latent: &[f64]) -> ControlDecision {
        let lp_used = self.lp_prev;
        let (source, pre_noise_action) = if self.cfg.cmc && lp_used >= 0.0 {
            self.counters.planner_invocations += 1;
            let proposal = planner::propose(
                &self.dynamics,
                &self.learner,
                latent,
                self.cfg.planner.horizon,
            );
            let report = planner::optimize(&self.dynamics, proposal, latent, &self.cfg.planner);
            if report.aborted_non_finite {
                self.counters.aborted_updates += 1;
            }
            (
                DecisionSource::ModelBased,
                planner::first_action(&report.plan).to_vec(),
            )
        } else {
            (DecisionSource::ModelFree, self.learner.act(latent))
        };
        ControlDecision {
            source,
            lp_used,
            executed_action: pre_noise_action.clone(),
            pre_noise_action,
        }
    }

    /// Seeded Gaussian exploration noise, then clamping to [-1, 1].
    pub fn add_noise(&mut self, action: &[f64]) -> Vec<f64> {
        if self.cfg.noise_std == 0.0 {
            return action.to_vec();
        }
        let normal = Normal::new(0.0, self.cfg.noise_std).expect("std validated");
        action
            .iter()
            .map(|a| (a + normal.sample(&mut self.noise_rng)).clamp(-1.0, 1.0))
            .collect()
    }

    fn train_tick(&mut self) -> TickReport {
        let mut report = TickReport {
            ticked: false,
            critic: 0.0,
            rec: 0.0,
            model: 0.0,
        };
        if self.buffer.len() < self.cfg.warmup.max(self.cfg.minibatch) {
            return report; // warmup: skipped silently
        }
        report.ticked = true;
        let mut critic_sum = 0.0;
        let mut rec_sum = 0.0;
        for _ in 0..self.cfg.n_ac {
            let batch = self.buffer.sample(&mut self.sample_rng, self.cfg.minibatch);
            match self.learner.combined_update(&batch) {
                Ok(losses) => {
                    critic_sum += losses.critic;
                    rec_sum += losses.rec;
                }
                Err(_) => {
                    self.counters.aborted_updates += 1;
                    continue;
                }
            }
            let actor_result: Result<(), RlError> = match self.cfg.algo {
                Algo::Ddpg => self.learner.ddpg_actor_update(&batch),
                Algo::Cacla => self.learner.cacla_actor_update(&batch).map(|_| ()),
            };
            if actor_result.is_err() {
                self.counters.aborted_updates += 1;
            }
        }
        let mut model_sum = 0.0;
        for _ in 0..self.cfg.n_model {
            let batch = self.buffer.sample(&mut self.sample_rng, self.cfg.minibatch);
            let result = if self.cfg.reencode_latents {
                let fresh: Vec<(Vec<f64>, Vec<f64>)> = batch
                    .iter()
                    .map(|tr| {
                        let a = self.learner.encode_planes(&tr.obs_planes()).map(|t| t.data);
                        let b = self
                            .learner
                            .encode_planes(&tr.next_obs_planes())
                            .map(|t| t.data);
                        (a.unwrap_or_default(), b.unwrap_or_default())
                    })
                    .collect();
                let pairs: Vec<(&[f64], &[f64], &[f64], f64)> = batch
                    .iter()
                    .zip(&fresh)
                    .map(|(tr, (a, b))| {
                        (a.as_slice(), tr.action.as_slice(), b.as_slice(), tr.reward_ext)
                    })
                    .collect();
                self.dynamics.train_pairs(&pairs)
            } else {
                self.dynamics.train(&batch)
            };
            match result {
                Ok(loss) => model_sum += loss,
                Err(_) => self.counters.aborted_updates += 1,
            }
        }
        self.learner.soft_update_targets();
        if self.cfg.n_ac > 0 {
            report.critic = critic_sum / self.cfg.n_ac as f64;
            report.rec = rec_sum / self.cfg.n_ac as f64;
        }
        if self.cfg.n_model > 0 {
            report.model = model_sum / self.cfg.n_model as f64;
        }
        report
    }

    /// Runs E episodes of at most T steps and returns per-episode metrics.
    pub fn run(&mut self) -> Result<RunResult, RlError> {
        let mut episodes = Vec::with_capacity(self.cfg.episodes);
        let mut trace = Vec::new();
        for episode in 0..self.cfg.episodes {
            let metrics = self.run_episode(episode, &mut trace)?;
            episodes.push(metrics);
        }
        Ok(RunResult {
            episodes,
            counters: self.counters,
            trace,
        })
    }

    fn run_episode(
        &mut self,
        episode: usize,
        trace: &mut Vec<StepTrace>,
    ) -> Result<EpisodeMetrics, RlError> {
        let mut obs = self.env.reset();
        let horizon = self.env.episode_length();
        let mut return_ext = 0.0;
        let mut success = false;
        let mut mb_steps = 0usize;
        let mut steps = 0usize;
        let mut e_sum = 0.0;
        let mut lp_sum = 0.0;
        let mut r_int_sum = 0.0;
        let mut tick_count = 0usize;
        let mut critic_sum = 0.0;
        let mut rec_sum = 0.0;
        let mut model_sum = 0.0;

        for _ in 0..horizon {
            let latent = self.learner.encode(&obs)?;
            let decision = self.select_action(&latent.data);
            let executed = self.add_noise(&decision.pre_noise_action);
            if decision.source == DecisionSource::ModelBased {
                mb_steps += 1;
            }

            let step = self.env.step(&executed);
            let next_latent = self.learner.encode(&step.observation)?;

            // Curiosity accounting happens with the pre-update model, in
            // execution order: error, learning progress, intrinsic reward.
            let e = self.dynamics.step_error(
                &latent.data,
                &executed,
                &next_latent.data,
                step.reward_ext,
            );
            self.curiosity.record_error(e);
            let lp = self.curiosity.learning_progress();
            let r_int = self.curiosity.intrinsic_reward();
            let reward = if self.cfg.cmc {
                self.counters.intrinsic_reward_uses += 1;
                self.curiosity.combine(step.reward_ext, r_int, self.global_step)
            } else {
                step.reward_ext
            };

            self.buffer.push(Transition::new(
                &obs,
                latent.data.clone(),
                executed.clone(),
                reward,
                step.reward_ext,
                &step.observation,
                next_latent.data.clone(),
                step.done,
            ));

            let tick = self.train_tick();
            if tick.ticked {
                tick_count += 1;
                critic_sum += tick.critic;
                rec_sum += tick.rec;
                model_sum += tick.model;
            }

            if self.cfg.collect_trace {
                trace.push(StepTrace {
                    t: self.global_step,
                    episode,
                    source: decision.source,
                    lp_used: decision.lp_used,
                    lp_computed: lp,
                    reward_ext: step.reward_ext,
                    reward_int: r_int,
                    reward,
                    outcome: step.info.outcome,
                });
            }

            return_ext += step.reward_ext;
            e_sum += e;
            lp_sum += lp;
            r_int_sum += r_int;
            steps += 1;
            self.lp_prev = lp;
            self.global_step += 1;

            if step.done {
                success = step.info.outcome == Outcome::Success;
                break;
            }
            obs = step.observation;
        }

        let sn = steps.max(1) as f64;
        let tn = tick_count.max(1) as f64;
        Ok(EpisodeMetrics {
            episode,
            return_ext,
            success,
            mb_fraction: mb_steps as f64 / sn,
            mean_e_prd: e_sum / sn,
            mean_lp: lp_sum / sn,
            mean_r_int: r_int_sum / sn,
            loss_critic: critic_sum / tn,
            loss_rec: rec_sum / tn,
            loss_model: model_sum / tn,
        })
    }
}
