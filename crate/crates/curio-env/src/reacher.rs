//! Planar 3-joint reaching task observed through a top-down image.
//!
//! The arm is anchored at the image center; a target disc is placed at the
//! tip position of a random joint configuration, which guarantees it is
//! reachable. Success is the tip entering the target zone.

use crate::raster::Canvas;
use crate::{placement_rng, EnvConfig, Environment, Observation, Outcome, RewardMode, StepInfo, StepResult};
use rand::Rng;
use std::f64::consts::FRAC_PI_2;

/// Segment length in world units (world is the unit square).
pub const SEGMENT_LEN: f64 = 0.14;
/// Total arm length.
pub const ARM_LEN: f64 = 3.0 * SEGMENT_LEN;
/// Target zone radius: one tenth of the arm's total length.
pub const ZONE_RADIUS: f64 = ARM_LEN / 10.0;
/// Largest possible tip-target distance, used to normalize dense penalties.
pub const MAX_DIST: f64 = 2.0 * ARM_LEN;
/// Arm base in world coordinates.
pub const BASE: [f64; 2] = [0.5, 0.5];

pub const JOINT_LIMIT: f64 = FRAC_PI_2;

#[derive(Debug, Clone)]
pub struct ReacherState {
    /// Joint angles in radians, each clamped to [-pi/2, +pi/2].
    pub joint_angles: [f64; 3],
    /// Target disc center in world coordinates.
    pub target: [f64; 2],
}

impl ReacherState {
    /// Forward kinematics: positions of the three joint endpoints.
    pub fn points(&self) -> [[f64; 2]; 4] {
        let mut pts = [[0.0; 2]; 4];
        pts[0] = BASE;
        let mut dir = FRAC_PI_2; // canonical pose points straight up
        for (i, p) in self.joint_angles.iter().enumerate() {
            dir += p;
            pts[i + 1] = [
                pts[i][0] + SEGMENT_LEN * dir.cos(),
                pts[i][1] + SEGMENT_LEN * dir.sin(),
            ];
        }
        pts
    }

    pub fn tip(&self) -> [f64; 2] {
        self.points()[3]
    }
}

/// Extrinsic reward for the reaching task.
///
/// Dense: +1 inside the target zone (boundary inclusive), otherwise the
/// negated distance normalized by the largest possible distance, in [-1, 0).
/// Sparse: 1 inside the zone, 0 otherwise.
pub fn reward_reach(tip: [f64; 2], target: [f64; 2], mode: RewardMode) -> f64 {
    let dist = ((tip[0] - target[0]).powi(2) + (tip[1] - target[1]).powi(2)).sqrt();
    if dist <= ZONE_RADIUS {
        return 1.0;
    }
    match mode {
        RewardMode::Dense => -(dist / MAX_DIST).min(1.0),
        RewardMode::Sparse => 0.0,
    }
}

pub struct PixelReacher {
    cfg: EnvConfig,
    state: ReacherState,
    next_episode: u64,
    step_count: usize,
    done: bool,
}

impl PixelReacher {
    pub fn new(cfg: EnvConfig) -> Result<Self, String> {
        cfg.validate()?;
        if cfg.image_height != cfg.image_width {
            return Err("reacher expects a square image".into());
        }
        Ok(Self {
            cfg,
            state: ReacherState {
                joint_angles: [0.0; 3],
                target: [0.5, 0.5 + ARM_LEN],
            },
            next_episode: 0,
            step_count: 0,
            done: false,
        })
    }

    pub fn state(&self) -> &ReacherState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    #[cfg(test)]
    pub(crate) fn state_mut(&mut self) -> &mut ReacherState {
        &mut self.state
    }

    fn max_step_rad(&self) -> f64 {
        self.cfg.max_step.to_radians()
    }

    pub fn render(&self) -> Observation {
        render_reacher(&self.state, self.cfg.image_height)
    }
}

/// Deterministic rasterization of a reacher state into an [S, S, 3] image:
/// target disc on the red channel, arm segments on green, tip marker on blue.
pub fn render_reacher(state: &ReacherState, size: usize) -> Observation {
    let s = size as f64;
    let to_px = |p: [f64; 2]| (p[0] * s, (1.0 - p[1]) * s);
    let mut canvas = Canvas::new(size, size);

    let (tx, ty) = to_px(state.target);
    canvas.disc(tx, ty, ZONE_RADIUS * s, [1.0, 0.0, 0.0]);

    let pts = state.points();
    for i in 0..3 {
        let (x0, y0) = to_px(pts[i]);
        let (x1, y1) = to_px(pts[i + 1]);
        canvas.capsule(x0, y0, x1, y1, 0.7, [0.0, 0.9, 0.0]);
    }
    let (gx, gy) = to_px(pts[3]);
    canvas.disc(gx, gy, 1.0, [0.0, 0.0, 1.0]);
    canvas.finish()
}

impl Environment for PixelReacher {
    fn observation_shape(&self) -> [usize; 3] {
        [self.cfg.image_height, self.cfg.image_width, 3]
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn episode_length(&self) -> usize {
        self.cfg.episode_length
    }

    fn reset(&mut self) -> Observation {
        let idx = self.next_episode;
        self.next_episode += 1;
        self.reset_with(idx)
    }

    fn reset_with(&mut self, episode_index: u64) -> Observation {
        let mut rng = placement_rng(self.cfg.seed, episode_index);
        // Sample the target as the tip of a random configuration so that a
        // reaching configuration always exists.
        let goal_pose = ReacherState {
            joint_angles: [
                rng.gen_range(-JOINT_LIMIT..=JOINT_LIMIT),
                rng.gen_range(-JOINT_LIMIT..=JOINT_LIMIT),
                rng.gen_range(-JOINT_LIMIT..=JOINT_LIMIT),
            ],
            target: [0.0, 0.0],
        };
        self.state = ReacherState {
            joint_angles: [0.0; 3],
            target: goal_pose.tip(),
        };
        self.step_count = 0;
        self.done = false;
        self.render()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        assert!(!self.done, "episode finished; call reset first");
        assert_eq!(action.len(), 3, "reacher expects 3 action components");
        let scale = self.max_step_rad();
        for (i, a) in action.iter().enumerate() {
            let a = if a.is_finite() { a.clamp(-1.0, 1.0) } else { 0.0 };
            self.state.joint_angles[i] =
                (self.state.joint_angles[i] + a * scale).clamp(-JOINT_LIMIT, JOINT_LIMIT);
        }
        self.step_count += 1;

        let tip = self.state.tip();
        let dist = ((tip[0] - self.state.target[0]).powi(2)
            + (tip[1] - self.state.target[1]).powi(2))
        .sqrt();
        let norm_dist = (dist / MAX_DIST).min(1.0);
        let reward = reward_reach(tip, self.state.target, self.cfg.reward_mode);

        let outcome = if dist <= ZONE_RADIUS {
            Outcome::Success
        } else if self.step_count >= self.cfg.episode_length {
            Outcome::Timeout
        } else {
            Outcome::None
        };
        self.done = outcome != Outcome::None;

        StepResult {
            observation: self.render(),
            reward_ext: reward,
            done: self.done,
            info: StepInfo {
                distance: norm_dist,
                outcome,
            },
        }
    }

    fn state_summary(&self) -> serde_json::Value {
        serde_json::json!({
            "joints": self.state.joint_angles,
            "target": self.state.target,
            "tip": self.state.tip(),
            "step": self.step_count,
        })
    }
}

// Angle convention: canonical pose (all joints zero) points straight up and
// already uses the full arm length, so the farthest reachable points lie on
// the circle of radius ARM_LEN around BASE.
#[allow(dead_code)]
const _: () = {
    assert!(ARM_LEN < 0.5, "arm must stay inside the unit square");
};
