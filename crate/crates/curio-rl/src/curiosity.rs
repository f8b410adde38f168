//! Curiosity bookkeeping: windowed model-error averages, learning progress,
//! and the scaled, annealed intrinsic reward.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct Curiosity {
    errors: VecDeque<f64>,
    /// Window width (sigma) of the error average.
    sigma: usize,
    /// Lag (W) between the two compared windows.
    lag: usize,
    /// Learning-progress placeholder while history is insufficient; negative.
    initial_lp: f64,
    /// Largest |LP| observed over genuine (complete-window) values.
    running_scale: f64,
    /// Annealing constant D of the intrinsic-reward decay 1 / (1 + D t).
    decay: f64,
    epsilon_scale: f64,
}

impl Curiosity {
    pub fn new(sigma: usize, lag: usize, initial_lp: f64, decay: f64) -> Self {
        assert!(sigma >= 1, "sigma must be >= 1");
        assert!(lag >= 1, "lag must be >= 1");
        assert!(initial_lp < 0.0, "initial learning progress must be negative");
        assert!(decay > 0.0, "decay must be positive");
        Self {
            errors: VecDeque::with_capacity(sigma + lag),
            sigma,
            lag,
            initial_lp,
            running_scale: 0.0,
            decay,
            epsilon_scale: 1e-8,
        }
    }

    /// Appends one per-step model prediction error (recorded once, at
    /// execution time).
    pub fn record_error(&mut self, e: f64) {
        debug_assert!(e >= 0.0, "prediction errors are non-negative");
        if self.errors.len() == self.sigma + self.lag {
            self.errors.pop_front();
        }
        self.errors.push_back(e);
    }

    /// Mean of the `sigma` most recent errors ending `at_offset` steps ago;
    /// `None` while fewer than `sigma + at_offset` errors exist.
    pub fn window_average(&self, at_offset: usize) -> Option<f64> {
        let len = self.errors.len();
        if len < self.sigma + at_offset {
            return None;
        }
        let end = len - at_offset;
        let start = end - self.sigma;
        let sum: f64 = self.errors.range(start..end).sum();
        Some(sum / self.sigma as f64)
    }

    /// LP_t = <e_{t-W}> - <e_t>, or the negative initial placeholder while
    /// either window is incomplete. The flag marks a genuine value.
    pub fn learning_progress_checked(&self) -> (f64, bool) {
        match (self.window_average(self.lag), self.window_average(0)) {
            (Some(lagged), Some(current)) => (lagged - current, true),
            _ => (self.initial_lp, false),
        }
    }

    pub fn learning_progress(&self) -> f64 {
        self.learning_progress_checked().0
    }

    /// r_int = clamp(-LP / max(scale, eps), -1, 1) where scale is the running
    /// max of |LP| over genuine values (updated before use).
    pub fn intrinsic_reward(&mut self) -> f64 {
        let (lp, genuine) = self.learning_progress_checked();
        if genuine {
            self.running_scale = self.running_scale.max(lp.abs());
        }
        (-lp / self.running_scale.max(self.epsilon_scale)).clamp(-1.0, 1.0)
    }

    /// Combined reward r_t = r_ext + r_int / (1 + D t) with the run-global
    /// environment step index t.
    pub fn combine(&self, reward_ext: f64, reward_int: f64, t: u64) -> f64 {
        combine_reward(reward_ext, reward_int, self.decay, t)
    }

    pub fn running_scale(&self) -> f64 {
        self.running_scale
    }

    pub fn history_len(&self) -> usize {
        self.errors.len()
    }
}

/// r_t = r_ext + r_int / (1 + D t).
pub fn combine_reward(reward_ext: f64, reward_int: f64, decay: f64, t: u64) -> f64 {
    reward_ext + reward_int / (1.0 + decay * t as f64)
}
