//! Learned latent dynamics: one network with a shared hidden layer and a
//! joint linear output predicting the next latent code and the extrinsic
//! reward for a (latent, action) pair.

use crate::replay::Transition;
use crate::RlError;
use curio_nn::{adam_step, Activation, AdamState, LayerSpec, NetGrads, Network, Tensor};

/// Read-only view of a latent-space world model, enough for the planner to
/// unroll trajectories and backpropagate through them.
pub trait LatentModel {
    fn latent_dim(&self) -> usize;
    fn action_dim(&self) -> usize;

    /// (next latent, predicted extrinsic reward).
    fn predict(&self, latent: &[f64], action: &[f64]) -> (Vec<f64>, f64);

    /// Vector-Jacobian product: cotangents on (next latent, reward) mapped
    /// back to cotangents on (latent, action).
    fn vjp(
        &self,
        latent: &[f64],
        action: &[f64],
        grad_next: &[f64],
        grad_reward: f64,
    ) -> (Vec<f64>, Vec<f64>);
}

pub struct DynamicsModel {
    net: Network,
    adam: AdamState,
    latent_dim: usize,
    action_dim: usize,
    lr: f64,
}

impl DynamicsModel {
    /// Feedforward model: (latent ++ action) -> hidden tanh units -> joint
    /// linear output of latent_dim + 1 values (next latent ++ reward).
    pub fn new(latent_dim: usize, action_dim: usize, hidden: usize, lr: f64, seed: u64) -> Self {
        let net = Network::new(
            vec![
                LayerSpec::Dense {
                    inputs: latent_dim + action_dim,
                    outputs: hidden,
                    activation: Activation::Tanh,
                },
                LayerSpec::Dense {
                    inputs: hidden,
                    outputs: latent_dim + 1,
                    activation: Activation::Linear,
                },
            ],
            seed,
        )
        .expect("dynamics spec is consistent");
        let adam = AdamState::new(&net);
        Self {
            net,
            adam,
            latent_dim,
            action_dim,
            lr,
        }
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    fn input(&self, latent: &[f64], action: &[f64]) -> Tensor {
        debug_assert_eq!(latent.len(), self.latent_dim);
        debug_assert_eq!(action.len(), self.action_dim);
        let mut data = Vec::with_capacity(latent.len() + action.len());
        data.extend_from_slice(latent);
        data.extend_from_slice(action);
        Tensor::new(vec![data.len()], data).expect("consistent")
    }

    /// Per-step model prediction error (the curiosity signal):
    /// ||P(phi, a) - phi'||^2 + ||R(phi, a) - r_ext||^2.
    pub fn step_error(
        &self,
        latent: &[f64],
        action: &[f64],
        next_latent: &[f64],
        reward_ext: f64,
    ) -> f64 {
        let (pred_next, pred_reward) = self.predict(latent, action);
        let state_err: f64 = pred_next
            .iter()
            .zip(next_latent)
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        let reward_err = (pred_reward - reward_ext) * (pred_reward - reward_ext);
        state_err + reward_err
    }

    /// Model loss over (latent, action, next latent, extrinsic reward) tuples
    /// and its parameter gradients:
    /// (1/n) sum_i ||P(phi_i, a_i) - phi_{i+1}||^2 + ||R(phi_i, a_i) - r_i_ext||^2.
    pub fn loss_gradients_pairs(
        &self,
        pairs: &[(&[f64], &[f64], &[f64], f64)],
    ) -> Result<(f64, NetGrads), RlError> {
        assert!(!pairs.is_empty(), "batch must be nonempty");
        let n = pairs.len() as f64;
        let mut grads = NetGrads::zeros_like(&self.net);
        let mut loss = 0.0;
        for (latent, action, next_latent, reward_ext) in pairs {
            let x = self.input(latent, action);
            let (out, trace) = self.net.forward(&x)?;
            let mut grad_out = out.clone();
            for (k, g) in grad_out.data.iter_mut().enumerate() {
                let target = if k < self.latent_dim {
                    next_latent[k]
                } else {
                    *reward_ext
                };
                let d = *g - target;
                loss += d * d / n;
                *g = 2.0 * d / n;
            }
            self.net.backward_into(&trace, &grad_out, &mut grads)?;
        }
        Ok((loss, grads))
    }

    /// Batch loss/gradients against the stored collection-time latents.
    pub fn loss_gradients(&self, batch: &[&Transition]) -> Result<(f64, NetGrads), RlError> {
        let pairs: Vec<(&[f64], &[f64], &[f64], f64)> = batch
            .iter()
            .map(|tr| {
                (
                    tr.latent.as_slice(),
                    tr.action.as_slice(),
                    tr.next_latent.as_slice(),
                    tr.reward_ext,
                )
            })
            .collect();
        self.loss_gradients_pairs(&pairs)
    }

    fn apply(&mut self, loss: f64, grads: &NetGrads) -> Result<f64, RlError> {
        if !loss.is_finite() {
            return Err(RlError::NonFiniteLoss("model loss".into()));
        }
        adam_step(&mut self.net, grads, &mut self.adam, self.lr)?;
        Ok(loss)
    }

    /// One Adam step on the model loss against stored latents. A non-finite
    /// loss aborts the step without touching parameters.
    pub fn train(&mut self, batch: &[&Transition]) -> Result<f64, RlError> {
        let (loss, grads) = self.loss_gradients(batch)?;
        self.apply(loss, &grads)
    }

    /// Like `train`, but against caller-supplied (re-encoded) latents.
    pub fn train_pairs(&mut self, pairs: &[(&[f64], &[f64], &[f64], f64)]) -> Result<f64, RlError> {
        let (loss, grads) = self.loss_gradients_pairs(pairs)?;
        self.apply(loss, &grads)
    }
}

impl LatentModel for DynamicsModel {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn predict(&self, latent: &[f64], action: &[f64]) -> (Vec<f64>, f64) {
        let out = self
            .net
            .eval(&self.input(latent, action))
            .expect("dynamics dims validated");
        let reward = out.data[self.latent_dim];
        let mut next = out.data;
        next.truncate(self.latent_dim);
        (next, reward)
    }

    fn vjp(
        &self,
        latent: &[f64],
        action: &[f64],
        grad_next: &[f64],
        grad_reward: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let x = self.input(latent, action);
        let (_, trace) = self.net.forward(&x).expect("dynamics dims validated");
        let mut cotangent = grad_next.to_vec();
        cotangent.push(grad_reward);
        let grad_out = Tensor::new(vec![cotangent.len()], cotangent).expect("consistent");
        let (_, grad_in) = self
            .net
            .backward(&trace, &grad_out)
            .expect("trace from matching forward");
        let grad_latent = grad_in.data[..self.latent_dim].to_vec();
        let grad_action = grad_in.data[self.latent_dim..].to_vec();
        (grad_latent, grad_action)
    }
}
