use crate::error::{NnError, Result};
use crate::network::{LayerParams, NetGrads, Network};

/// Per-parameter Adam accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        Self::with_hyper(net, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(net: &Network, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros = || {
            net.params()
                .iter()
                .map(|p| LayerParams {
                    weight: p.weight.zeros_like(),
                    bias: p.bias.zeros_like(),
                })
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[LayerParams], &[LayerParams]) {
        (&self.m, &self.v)
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients without
/// touching parameters or moments.
pub fn adam_step(net: &mut Network, grads: &NetGrads, state: &mut AdamState, lr: f64) -> Result<()> {
    for (i, g) in grads.layers.iter().enumerate() {
        if !g.weight.is_finite() || !g.bias.is_finite() {
            return Err(NnError::NonFiniteGradient { layer: i });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    for (i, p) in net.params_mut().iter_mut().enumerate() {
        let g = &grads.layers[i];
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        update_slice(&mut p.weight.data, &g.weight.data, &mut m.weight.data, &mut v.weight.data, state.beta1, state.beta2, state.epsilon, lr, bc1, bc2);
        update_slice(&mut p.bias.data, &g.bias.data, &mut m.bias.data, &mut v.bias.data, state.beta1, state.beta2, state.epsilon, lr, bc1, bc2);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}
