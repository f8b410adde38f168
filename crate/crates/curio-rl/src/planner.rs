//! Gradient-descent model-predictive planner.
//!
//! Builds an actor-seeded action sequence, unrolls the latent model over the
//! horizon, and descends the squared deviation of the predicted return from a
//! target return by backpropagation through time — adjusting only the action
//! sequence, never model or actor parameters. Only the first action of the
//! optimized plan is ever executed; callers replan every step.

use crate::dynamics::LatentModel;

/// Action source for the initial proposal.
pub trait Policy {
    fn act_latent(&self, latent: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct Plan {
    /// One action vector per horizon step, each component in [-1, 1].
    pub actions: Vec<Vec<f64>>,
}

impl Plan {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub iterations: usize,
    pub update_rate: f64,
    pub target_return: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 3,
            iterations: 10,
            update_rate: 0.05,
            target_return: 1.0,
        }
    }
}

/// Iteration-0 proposal: the actor suggests an action at the current latent
/// and at every model-predicted successor.
pub fn propose(model: &dyn LatentModel, policy: &dyn Policy, latent: &[f64], horizon: usize) -> Plan {
    assert!(horizon >= 1, "horizon must be >= 1");
    let mut actions = Vec::with_capacity(horizon);
    let mut state = latent.to_vec();
    for h in 0..horizon {
        let action = policy.act_latent(&state);
        if h + 1 < horizon {
            let (next, _) = model.predict(&state, &action);
            state = next;
        }
        actions.push(action);
    }
    Plan { actions }
}

/// Squared deviation of the undiscounted predicted H-step return from the
/// target return: (R* - sum_h r_h)^2.
pub fn plan_loss(model: &dyn LatentModel, plan: &Plan, latent: &[f64], target_return: f64) -> f64 {
    let mut state = latent.to_vec();
    let mut sum = 0.0;
    for action in &plan.actions {
        let (next, reward) = model.predict(&state, action);
        sum += reward;
        state = next;
    }
    let dev = target_return - sum;
    dev * dev
}

/// Exact gradient of the plan loss wrt every action component, obtained by
/// backpropagation through time across the model unroll. Returns the loss of
/// the unperturbed plan alongside.
pub fn plan_gradient(
    model: &dyn LatentModel,
    plan: &Plan,
    latent: &[f64],
    target_return: f64,
) -> (f64, Vec<Vec<f64>>) {
    let horizon = plan.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(latent.to_vec());
    let mut sum = 0.0;
    for action in &plan.actions {
        let (next, reward) = model.predict(states.last().expect("nonempty"), action);
        sum += reward;
        states.push(next);
    }
    let dev = target_return - sum;
    let loss = dev * dev;
    // dL/dr_h = -2 (R* - sum r) for every h.
    let dr = -2.0 * dev;

    let mut grads = vec![Vec::new(); horizon];
    let mut grad_state = vec![0.0; model.latent_dim()];
    for h in (0..horizon).rev() {
        // At the last step the state cotangent is zero: the final predicted
        // latent feeds nothing, so that action only affects its own reward.
        let (g_latent, g_action) = model.vjp(&states[h], &plan.actions[h], &grad_state, dr);
        grads[h] = g_action;
        grad_state = g_latent;
    }
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub plan: Plan,
    /// Loss of the plan at the start of each iteration.
    pub losses: Vec<f64>,
    /// Set when a non-finite gradient stopped the optimization early; the
    /// returned plan is then the best one seen.
    pub aborted_non_finite: bool,
}

/// K iterations of projected gradient descent on the plan:
/// a <- clamp(a - alpha * dL/da, -1, 1), re-unrolling each iteration.
///
/// If the loss rises three iterations in a row the step is halved for the
/// remainder of the call; a non-finite gradient stops early with the
/// best-so-far plan.
pub fn optimize(
    model: &dyn LatentModel,
    initial: Plan,
    latent: &[f64],
    cfg: &PlannerConfig,
) -> OptimizeReport {
    let mut plan = initial;
    let mut alpha = cfg.update_rate;
    let mut losses = Vec::with_capacity(cfg.iterations);
    let mut best: Option<(Plan, f64)> = None;
    let mut prev_loss = f64::INFINITY;
    let mut rises = 0u32;

    for _ in 0..cfg.iterations {
        let (loss, grads) = plan_gradient(model, &plan, latent, cfg.target_return);
        let finite = loss.is_finite() && grads.iter().flatten().all(|g| g.is_finite());
        if !finite {
            let fallback = best.map(|(p, _)| p).unwrap_or(plan);
            return OptimizeReport {
                plan: fallback,
                losses,
                aborted_non_finite: true,
            };
        }
        if best.as_ref().map_or(true, |(_, b)| loss < *b) {
            best = Some((plan.clone(), loss));
        }
        losses.push(loss);
        if loss > prev_loss {
            rises += 1;
            if rises >= 3 {
                alpha *= 0.5;
            }
        } else {
            rises = 0;
        }
        prev_loss = loss;

        for (action, grad) in plan.actions.iter_mut().zip(&grads) {
            for (a, g) in action.iter_mut().zip(grad) {
                *a = (*a - alpha * g).clamp(-1.0, 1.0);
            }
        }
    }
    OptimizeReport {
        plan,
        losses,
        aborted_non_finite: false,
    }
}

/// The only part of an optimized plan that is ever executed.
pub fn first_action(plan: &Plan) -> &[f64] {
    &plan.actions[0]
}
