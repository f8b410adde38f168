//! Hybrid model-based / model-free control in a learned latent space.
//!
//! The pieces: an actor-critic learner whose encoder is trained jointly with
//! the critic and a pixel decoder; a latent dynamics model whose windowed
//! prediction-error trend (learning progress) both gates a gradient-descent
//! MPC planner and supplies an annealed intrinsic reward; and the per-step
//! control loop tying them to an environment through a replay buffer.

mod controller;
mod curiosity;
mod dynamics;
mod learner;
mod planner;
mod presets;
mod replay;

pub use controller::{
    Algo, ControlDecision, Controller, ControllerConfig, Counters, DecisionSource, EpisodeMetrics,
    RunResult, StepTrace,
};
pub use curiosity::{combine_reward, Curiosity};
pub use dynamics::{DynamicsModel, LatentModel};
pub use learner::{obs_to_planes, CombinedGrads, Learner, LearnerConfig, LossReport};
pub use planner::{
    first_action, optimize, plan_gradient, plan_loss, propose, OptimizeReport, Plan,
    PlannerConfig, Policy,
};
pub use presets::{
    actor_spec, autoencoder_specs, build_learner, critic_head_spec, NetPreset, DYNAMICS_HIDDEN,
};
pub use replay::{ReplayBuffer, Transition};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite loss ({0}); update aborted")]
    NonFiniteLoss(String),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Nn(#[from] curio_nn::NnError),
}
