//! One-shoulder grasping task observed through a wide low image.
//!
//! The agent controls the shoulder angle and the hand aperture. Closing the
//! hand at the target angle (within tolerance) grasps the object; sweeping a
//! closed hand through the object's angular sector topples it. Both end the
//! episode.

use crate::raster::Canvas;
use crate::{placement_rng, EnvConfig, Environment, Observation, Outcome, RewardMode, StepInfo, StepResult};
use rand::Rng;

/// Shoulder range of motion in degrees (symmetric).
pub const SHOULDER_LIMIT_DEG: f64 = 100.0;
/// Targets are placed within this angular range (keeps a margin to the limit).
pub const TARGET_RANGE_DEG: f64 = 80.0;
/// Closing within this many degrees of the target counts as a grasp, and a
/// closed hand sweeping through this sector topples the object.
pub const GRASP_TOL_DEG: f64 = 8.0;
/// Dense penalties are normalized by the full angular span.
pub const NORM_DEG: f64 = 2.0 * SHOULDER_LIMIT_DEG;
/// Aperture below this fraction counts as "more than half closed".
pub const CLOSED_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct GrasperState {
    /// Shoulder angle in degrees, clamped to +-SHOULDER_LIMIT_DEG.
    pub shoulder_angle: f64,
    /// Hand aperture in [0, 1]; 1 is fully open.
    pub hand_aperture: f64,
    /// Object angular position in degrees.
    pub target_angle: f64,
    pub object_upright: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspEvent {
    None,
    Grasped,
    Toppled,
}

/// True iff closing the hand at the current shoulder angle would retain the
/// object: |shoulder - target| <= tolerance (boundary inclusive).
pub fn verify_grasp(state: &GrasperState) -> bool {
    (state.shoulder_angle - state.target_angle).abs() <= GRASP_TOL_DEG
}

/// Extrinsic reward for the grasping task.
///
/// Dense: +1 grasped, -1 toppled, otherwise the negated angular distance
/// normalized to [-1, 0). Sparse: +1 grasped, -1 toppled, 0 otherwise.
pub fn reward_grasp(state: &GrasperState, event: GraspEvent, mode: RewardMode) -> f64 {
    match event {
        GraspEvent::Grasped => 1.0,
        GraspEvent::Toppled => -1.0,
        GraspEvent::None => match mode {
            RewardMode::Dense => {
                -((state.shoulder_angle - state.target_angle).abs() / NORM_DEG).min(1.0)
            }
            RewardMode::Sparse => 0.0,
        },
    }
}

pub struct PixelGrasper {
    cfg: EnvConfig,
    state: GrasperState,
    next_episode: u64,
    step_count: usize,
    done: bool,
}

impl PixelGrasper {
    pub fn new(cfg: EnvConfig) -> Result<Self, String> {
        cfg.validate()?;
        if cfg.image_width < cfg.image_height {
            return Err("grasper expects a wide image (width >= height)".into());
        }
        Ok(Self {
            cfg,
            state: GrasperState {
                shoulder_angle: 0.0,
                hand_aperture: 1.0,
                target_angle: 0.0,
                object_upright: true,
            },
            next_episode: 0,
            step_count: 0,
            done: false,
        })
    }

    pub fn state(&self) -> &GrasperState {
        &self.state
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    #[cfg(test)]
    pub(crate) fn state_mut(&mut self) -> &mut GrasperState {
        &mut self.state
    }

    /// Aperture change for one unit of action. One full-scale action closes
    /// an open hand past the halfway mark in a single step.
    fn aperture_step(&self) -> f64 {
        self.cfg.max_step / 32.0
    }

    pub fn render(&self) -> Observation {
        render_grasper(&self.state, self.cfg.image_height, self.cfg.image_width)
    }
}

/// Deterministic rasterization: the object is a red bar standing on a gray
/// table (lying flat once toppled); the hand is a pair of blue fingers whose
/// horizontal gap shows the aperture, with a green wrist mark above.
pub fn render_grasper(state: &GrasperState, h: usize, w: usize) -> Observation {
    let mut canvas = Canvas::new(h, w);
    let wf = w as f64;
    let hf = h as f64;
    let angle_to_x =
        |deg: f64| (deg + SHOULDER_LIMIT_DEG) / (2.0 * SHOULDER_LIMIT_DEG) * (wf - 4.0) + 2.0;

    let table_top = (hf * 0.8) as usize;
    canvas.vbar(wf / 2.0, wf / 2.0, table_top, h, [0.35, 0.35, 0.35]);

    let xt = angle_to_x(state.target_angle);
    if state.object_upright {
        canvas.vbar(xt, 1.0, (hf * 0.5) as usize, table_top, [1.0, 0.0, 0.0]);
    } else {
        canvas.vbar(xt, 2.5, table_top.saturating_sub(2), table_top, [1.0, 0.0, 0.0]);
    }

    let xh = angle_to_x(state.shoulder_angle);
    let gap = 0.75 + state.hand_aperture * 3.25;
    let finger_rows = ((hf * 0.15) as usize, (hf * 0.6) as usize);
    canvas.vbar(xh - gap, 0.5, finger_rows.0, finger_rows.1, [0.0, 0.0, 1.0]);
    canvas.vbar(xh + gap, 0.5, finger_rows.0, finger_rows.1, [0.0, 0.0, 1.0]);
    canvas.vbar(xh, 0.7, 0, finger_rows.0, [0.0, 0.9, 0.0]);
    canvas.finish()
}

impl Environment for PixelGrasper {
    fn observation_shape(&self) -> [usize; 3] {
        [self.cfg.image_height, self.cfg.image_width, 3]
    }

    fn action_dim(&self) -> usize {
        2
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
        self.state = GrasperState {
            shoulder_angle: 0.0,
            hand_aperture: 1.0,
            target_angle: rng.gen_range(-TARGET_RANGE_DEG..=TARGET_RANGE_DEG),
            object_upright: true,
        };
        self.step_count = 0;
        self.done = false;
        self.render()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        assert!(!self.done, "episode finished; call reset first");
        assert_eq!(action.len(), 2, "grasper expects 2 action components");
        let clip = |a: f64| if a.is_finite() { a.clamp(-1.0, 1.0) } else { 0.0 };
        let old_shoulder = self.state.shoulder_angle;
        let old_aperture = self.state.hand_aperture;

        let new_shoulder = (old_shoulder + clip(action[0]) * self.cfg.max_step)
            .clamp(-SHOULDER_LIMIT_DEG, SHOULDER_LIMIT_DEG);
        let new_aperture = (old_aperture + clip(action[1]) * self.aperture_step()).clamp(0.0, 1.0);
        self.state.shoulder_angle = new_shoulder;
        self.state.hand_aperture = new_aperture;
        self.step_count += 1;

        let closing = old_aperture >= CLOSED_THRESHOLD && new_aperture < CLOSED_THRESHOLD;
        let mut event = GraspEvent::None;
        if closing {
            if verify_grasp(&self.state) {
                event = GraspEvent::Grasped;
            } else {
                // Failed retention check: the hand is opened and the shoulder
                // is moved back; the episode continues.
                self.state.hand_aperture = 1.0;
                self.state.shoulder_angle = old_shoulder;
            }
        } else if old_aperture < CLOSED_THRESHOLD {
            // Closed hand sweeping through the object's sector topples it.
            let lo = old_shoulder.min(new_shoulder) - GRASP_TOL_DEG;
            let hi = old_shoulder.max(new_shoulder) + GRASP_TOL_DEG;
            if self.state.target_angle >= lo && self.state.target_angle <= hi {
                event = GraspEvent::Toppled;
                self.state.object_upright = false;
            }
        }

        let reward = reward_grasp(&self.state, event, self.cfg.reward_mode);
        let outcome = match event {
            GraspEvent::Grasped => Outcome::Success,
            GraspEvent::Toppled => Outcome::Topple,
            GraspEvent::None => {
                if self.step_count >= self.cfg.episode_length {
                    Outcome::Timeout
                } else {
                    Outcome::None
                }
            }
        };
        self.done = outcome != Outcome::None;

        StepResult {
            observation: self.render(),
            reward_ext: reward,
            done: self.done,
            info: StepInfo {
                distance: ((self.state.shoulder_angle - self.state.target_angle).abs() / NORM_DEG)
                    .min(1.0),
                outcome,
            },
        }
    }

    fn state_summary(&self) -> serde_json::Value {
        serde_json::json!({
            "shoulder": self.state.shoulder_angle,
            "aperture": self.state.hand_aperture,
            "target": self.state.target_angle,
            "upright": self.state.object_upright,
            "step": self.step_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: RewardMode) -> EnvConfig {
        EnvConfig {
            image_height: 16,
            image_width: 32,
            channels: 3,
            reward_mode: mode,
            episode_length: 30,
            max_step: 20.0,
            seed: 11,
        }
    }

    #[test]
    fn closing_at_target_grasps() {
        let mut env = PixelGrasper::new(cfg(RewardMode::Sparse)).unwrap();
        env.reset_with(0);
        let t = env.state().target_angle;
        env.state_mut().shoulder_angle = t;
        env.state_mut().hand_aperture = 0.6;
        let r = env.step(&[0.0, -1.0]);
        assert_eq!(r.reward_ext, 1.0);
        assert!(r.done);
        assert_eq!(r.info.outcome, Outcome::Success);
    }

    #[test]
    fn grasp_tolerance_boundary_is_inclusive() {
        let state = GrasperState {
            shoulder_angle: 10.0 + GRASP_TOL_DEG,
            hand_aperture: 0.4,
            target_angle: 10.0,
            object_upright: true,
        };
        assert!(verify_grasp(&state));
        let outside = GrasperState {
            shoulder_angle: 10.0 + GRASP_TOL_DEG + 1e-9,
            ..state
        };
        assert!(!verify_grasp(&outside));
    }

    #[test]
    fn failed_close_reopens_hand_and_restores_shoulder() {
        let mut env = PixelGrasper::new(cfg(RewardMode::Dense)).unwrap();
        env.reset_with(0);
        let t = env.state().target_angle;
        env.state_mut().shoulder_angle = (t + 60.0).clamp(-90.0, 90.0);
        env.state_mut().hand_aperture = 0.6;
        let before = env.state().shoulder_angle;
        let r = env.step(&[0.2, -1.0]);
        assert!(!r.done, "episode continues after a failed grasp");
        assert_eq!(env.state().hand_aperture, 1.0, "hand reopened");
        assert_eq!(env.state().shoulder_angle, before, "shoulder moved back");
    }

    #[test]
    fn closed_sweep_through_sector_topples() {
        let mut env = PixelGrasper::new(cfg(RewardMode::Sparse)).unwrap();
        env.reset_with(0);
        let t = env.state().target_angle;
        env.state_mut().shoulder_angle = (t - 15.0).max(-100.0);
        env.state_mut().hand_aperture = 0.2;
        let dir = if t - 15.0 >= -100.0 { 1.0 } else { -1.0 };
        let r = env.step(&[dir, 0.0]);
        assert_eq!(r.reward_ext, -1.0);
        assert!(r.done);
        assert_eq!(r.info.outcome, Outcome::Topple);
        assert!(!env.state().object_upright);
    }

    #[test]
    fn open_sweep_does_not_topple() {
        let mut env = PixelGrasper::new(cfg(RewardMode::Sparse)).unwrap();
        env.reset_with(0);
        let t = env.state().target_angle;
        env.state_mut().shoulder_angle = (t - 15.0).max(-100.0);
        env.state_mut().hand_aperture = 1.0;
        let r = env.step(&[1.0, 0.0]);
        assert_eq!(r.info.outcome == Outcome::Topple, false);
    }

    #[test]
    fn reward_grasp_cases() {
        let state = GrasperState {
            shoulder_angle: 50.0,
            hand_aperture: 1.0,
            target_angle: 0.0,
            object_upright: true,
        };
        assert_eq!(reward_grasp(&state, GraspEvent::Toppled, RewardMode::Dense), -1.0);
        assert_eq!(reward_grasp(&state, GraspEvent::Grasped, RewardMode::Dense), 1.0);
        // |50| / 200 = 0.25
        assert!((reward_grasp(&state, GraspEvent::None, RewardMode::Dense) + 0.25).abs() < 1e-12);
        assert_eq!(reward_grasp(&state, GraspEvent::None, RewardMode::Sparse), 0.0);
    }

    #[test]
    fn render_shows_aperture_and_topple() {
        let open = GrasperState {
            shoulder_angle: 0.0,
            hand_aperture: 1.0,
            target_angle: 40.0,
            object_upright: true,
        };
        let closed = GrasperState {
            hand_aperture: 0.0,
            ..open.clone()
        };
        let a = render_grasper(&open, 16, 32);
        let b = render_grasper(&closed, 16, 32);
        assert_ne!(a.data, b.data, "aperture must be visible");

        let toppled = GrasperState {
            object_upright: false,
            ..open
        };
        let c = render_grasper(&toppled, 16, 32);
        assert_ne!(a.data, c.data, "topple must be visible");
    }
}
