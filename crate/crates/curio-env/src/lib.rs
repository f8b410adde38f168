//! Deterministic, seeded, pixel-rendered continuous-control environments.
//!
//! Two tasks: a 3-joint planar reacher and a 2-DoF grasper, both observed
//! only through small RGB images and both offering dense and sparse reward
//! variants. Every (config, seed, action sequence) triple reproduces the
//! exact same observation and reward stream.

mod grasper;
mod raster;
mod reacher;
mod trace;

pub use grasper::{
    reward_grasp, verify_grasp, GraspEvent, GrasperState, PixelGrasper, CLOSED_THRESHOLD,
    GRASP_TOL_DEG, NORM_DEG, SHOULDER_LIMIT_DEG, TARGET_RANGE_DEG,
};
pub use reacher::{
    render_reacher, reward_reach, PixelReacher, ReacherState, ARM_LEN, BASE, JOINT_LIMIT,
    MAX_DIST, SEGMENT_LEN, ZONE_RADIUS,
};
pub use trace::{write_ppm, TraceRecord, TraceWriter};

use curio_nn::Tensor;
use serde::{Deserialize, Serialize};

/// Pixel observation: a `[H, W, C]` tensor with values in [0, 1], quantized
/// to the 1/255 grid by the renderer.
pub type Observation = Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    None,
    Success,
    Topple,
    Timeout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub image_height: usize,
    pub image_width: usize,
    pub channels: usize,
    pub reward_mode: RewardMode,
    /// Maximum steps per episode (T).
    pub episode_length: usize,
    /// Action scaling: one action unit moves a joint by this many degrees.
    pub max_step: f64,
    pub seed: u64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.image_height < 8 || self.image_width < 8 {
            return Err(format!(
                "image extents must be >= 8, got {}x{}",
                self.image_height, self.image_width
            ));
        }
        if self.channels != 3 {
            return Err(format!("expected 3 channels, got {}", self.channels));
        }
        if self.episode_length < 1 {
            return Err("episode_length must be >= 1".into());
        }
        if !(self.max_step > 0.0) {
            return Err("max_step must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepInfo {
    /// Normalized distance to the goal in [0, 1] (the dense penalty magnitude).
    pub distance: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward_ext: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Common surface of the two tasks. Instances are single-threaded and
/// independently owned; determinism is per-instance.
pub trait Environment {
    /// `[H, W, C]` of every observation.
    fn observation_shape(&self) -> [usize; 3];
    fn action_dim(&self) -> usize;
    fn episode_length(&self) -> usize;

    /// Starts the next episode (internal episode counter picks the placement).
    fn reset(&mut self) -> Observation;

    /// Starts an episode with an explicit placement index; the same index
    /// always produces bit-identical observations.
    fn reset_with(&mut self, episode_index: u64) -> Observation;

    /// Applies a clipped action. Must not be called on a finished episode.
    fn step(&mut self, action: &[f64]) -> StepResult;

    /// Small JSON summary of the internal state, for episode traces.
    fn state_summary(&self) -> serde_json::Value;
}

pub(crate) fn placement_rng(seed: u64, episode_index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mixed = seed ^ (episode_index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    rand_chacha::ChaCha8Rng::seed_from_u64(mixed)
}
