//! Actor-critic learner on a learned latent code.
//!
//! A convolutional (or dense, for synthetic tasks) encoder feeds three heads:
//! the decoder reconstructing the observation, the critic head reading
//! (latent, action), and the actor reading the latent alone. Encoder, decoder
//! and critic head train together on a weighted sum of reconstruction and
//! TD losses, so the latent becomes both a state discriminator and a value
//! predictor. Actor updates never touch the encoder.
//!
//! Latent conventions during training: critics always re-encode raw
//! observations with their own (online or target) encoder, while actor inputs
//! are the collection-time latents stored in the replay buffer.

use crate::replay::Transition;
use crate::RlError;
use curio_nn::{adam_step, AdamState, NetGrads, Network, Tensor};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub tau: f64,
    pub lambda_rec: f64,
    pub lambda_critic: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 1e-3,
            lambda_rec: 0.1,
            lambda_critic: 1.0,
            lr_critic: 1e-3,
            lr_actor: 1e-4,
        }
    }
}

/// Per-batch loss report; `critic` and `rec` are unweighted means,
/// `combined` is the weighted training objective.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossReport {
    pub critic: f64,
    pub rec: f64,
    pub combined: f64,
}

/// Gradients of the combined loss, per network.
pub struct CombinedGrads {
    pub encoder: NetGrads,
    pub decoder: NetGrads,
    pub critic_head: NetGrads,
}

pub struct Learner {
    encoder: Network,
    decoder: Network,
    critic_head: Network,
    actor: Network,
    target_encoder: Network,
    target_critic_head: Network,
    target_actor: Network,
    adam_encoder: AdamState,
    adam_decoder: AdamState,
    adam_critic: AdamState,
    adam_actor: AdamState,
    cfg: LearnerConfig,
    obs_shape: [usize; 3],
    latent_dim: usize,
    action_dim: usize,
}

/// [H, W, C] observation -> channel-major [C, H, W] buffer for the conv stack.
pub fn obs_to_planes(obs: &Tensor) -> Tensor {
    assert_eq!(obs.shape.len(), 3, "expected [H, W, C] observation");
    let (h, w, c) = (obs.shape[0], obs.shape[1], obs.shape[2]);
    let mut out = Tensor::zeros(vec![c, h, w]);
    for y in 0..h {
        for x in 0..w {
            let base = (y * w + x) * c;
            for ch in 0..c {
                out.data[ch * h * w + y * w + x] = obs.data[base + ch];
            }
        }
    }
    out
}

fn concat(a: &[f64], b: &[f64]) -> Tensor {
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a);
    data.extend_from_slice(b);
    Tensor::new(vec![a.len() + b.len()], data).expect("consistent")
}

impl Learner {
    pub fn new(
        encoder: Network,
        decoder: Network,
        critic_head: Network,
        actor: Network,
        obs_shape: [usize; 3],
        action_dim: usize,
        cfg: LearnerConfig,
    ) -> Result<Self, RlError> {
        let obs_len = obs_shape.iter().product::<usize>();
        let latent_dim = encoder.output_len();
        if encoder.input_len() != obs_len {
            return Err(RlError::Config(format!(
                "encoder expects {} inputs, observations have {obs_len}",
                encoder.input_len()
            )));
        }
        if decoder.input_len() != latent_dim || decoder.output_len() != obs_len {
            return Err(RlError::Config(
                "decoder must map the latent code back to observation size".into(),
            ));
        }
        if critic_head.input_len() != latent_dim + action_dim || critic_head.output_len() != 1 {
            return Err(RlError::Config(
                "critic head must map (latent ++ action) to a scalar".into(),
            ));
        }
        if actor.input_len() != latent_dim || actor.output_len() != action_dim {
            return Err(RlError::Config(
                "actor must map the latent code to an action".into(),
            ));
        }
        if !(0.0..=1.0).contains(&cfg.gamma) {
            return Err(RlError::Config("gamma must be in [0, 1]".into()));
        }
        if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
            return Err(RlError::Config("tau must be in (0, 1]".into()));
        }
        let target_encoder = encoder.clone();
        let target_critic_head = critic_head.clone();
        let target_actor = actor.clone();
        let adam_encoder = AdamState::new(&encoder);
        let adam_decoder = AdamState::new(&decoder);
        let adam_critic = AdamState::new(&critic_head);
        let adam_actor = AdamState::new(&actor);
        Ok(Self {
            encoder,
            decoder,
            critic_head,
            actor,
            target_encoder,
            target_critic_head,
            target_actor,
            adam_encoder,
            adam_decoder,
            adam_critic,
            adam_actor,
            cfg,
            obs_shape,
            latent_dim,
            action_dim,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn obs_shape(&self) -> [usize; 3] {
        self.obs_shape
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    pub fn critic_head(&self) -> &Network {
        &self.critic_head
    }

    pub fn actor(&self) -> &Network {
        &self.actor
    }

    pub fn target_nets(&self) -> (&Network, &Network, &Network) {
        (
            &self.target_encoder,
            &self.target_critic_head,
            &self.target_actor,
        )
    }

    pub fn nets_mut_for_tests(&mut self) -> (&mut Network, &mut Network, &mut Network, &mut Network) {
        (
            &mut self.encoder,
            &mut self.decoder,
            &mut self.critic_head,
            &mut self.actor,
        )
    }

    /// phi = f(s | omega): deterministic latent code of an observation.
    pub fn encode(&self, obs: &Tensor) -> Result<Tensor, RlError> {
        Ok(self.encoder.eval(&obs_to_planes(obs))?)
    }

    /// Same encoding for an observation already in the conv layout [C, H, W].
    pub fn encode_planes(&self, planes: &Tensor) -> Result<Tensor, RlError> {
        Ok(self.encoder.eval(planes)?)
    }

    /// Deterministic action for a latent code; tanh output keeps it in [-1, 1].
    pub fn act(&self, latent: &[f64]) -> Vec<f64> {
        let input = Tensor::new(vec![latent.len()], latent.to_vec()).expect("consistent");
        self.actor.eval(&input).expect("actor dims validated").data
    }

    /// Q(s, a): fresh encode through the online encoder, then the critic head.
    pub fn q_value(&self, obs: &Tensor, action: &[f64]) -> Result<f64, RlError> {
        let latent = self.encode(obs)?;
        let q = self.critic_head.eval(&concat(&latent.data, action))?;
        Ok(q.data[0])
    }

    fn q_from_planes(&self, planes: &Tensor, action: &[f64]) -> Result<f64, RlError> {
        let latent = self.encoder.eval(planes)?;
        let q = self.critic_head.eval(&concat(&latent.data, action))?;
        Ok(q.data[0])
    }

    /// TD target y = r + gamma * (1 - done) * Q'(s', mu'(phi'_stored)).
    ///
    /// The target critic re-encodes the raw next observation with the target
    /// encoder; the target actor consumes the stored next latent.
    pub fn td_target(&self, tr: &Transition) -> Result<f64, RlError> {
        if tr.done {
            return Ok(tr.reward);
        }
        let next_latent = self.target_encoder.eval(&tr.next_obs_planes())?;
        let next_action_input =
            Tensor::new(vec![tr.next_latent.len()], tr.next_latent.clone()).expect("consistent");
        let next_action = self.target_actor.eval(&next_action_input)?;
        let q_next = self
            .target_critic_head
            .eval(&concat(&next_latent.data, &next_action.data))?;
        Ok(tr.reward + self.cfg.gamma * q_next.data[0])
    }

    /// Reconstruction loss and its (unweighted) gradients for encoder and
    /// decoder: L_rec = mean squared pixel error of g(f(s)).
    pub fn reconstruction_gradients(
        &self,
        obs: &Tensor,
    ) -> Result<(f64, NetGrads, NetGrads), RlError> {
        let planes = obs_to_planes(obs);
        let (latent, enc_trace) = self.encoder.forward(&planes)?;
        let (recon, dec_trace) = self.decoder.forward(&latent)?;
        let recon_shape = recon.shape.clone();
        let recon = recon.reshaped(planes.shape.clone())?;
        let (loss, grad_recon) = curio_nn::mse(&recon, &planes)?;
        let grad_recon = grad_recon.reshaped(recon_shape)?;
        let (dec_grads, grad_latent) = self.decoder.backward(&dec_trace, &grad_recon)?;
        let (enc_grads, _) = self.encoder.backward(&enc_trace, &grad_latent)?;
        Ok((loss, enc_grads, dec_grads))
    }

    /// Gradients of lambda_rec * L_rec + lambda_critic * L_critic over a batch.
    pub fn combined_gradients(
        &self,
        batch: &[&Transition],
    ) -> Result<(CombinedGrads, LossReport), RlError> {
        assert!(!batch.is_empty(), "batch must be nonempty");
        let n = batch.len() as f64;
        let mut enc_grads = NetGrads::zeros_like(&self.encoder);
        let mut dec_grads = NetGrads::zeros_like(&self.decoder);
        let mut head_grads = NetGrads::zeros_like(&self.critic_head);
        let mut critic_loss = 0.0;
        let mut rec_loss = 0.0;

        for tr in batch {
            let (latent, enc_trace) = self.encoder.forward_owned(tr.obs_planes())?;
            let planes = enc_trace.input();

            // Critic branch.
            let joint = concat(&latent.data, &tr.action);
            let (q, head_trace) = self.critic_head.forward(&joint)?;
            let y = self.td_target(tr)?;
            let err = q.data[0] - y;
            critic_loss += err * err / n;
            let dq = Tensor::new(vec![1], vec![self.cfg.lambda_critic * 2.0 * err / n])
                .expect("consistent");
            let grad_joint = self
                .critic_head
                .backward_into(&head_trace, &dq, &mut head_grads)?;

            // Reconstruction branch.
            let (recon, dec_trace) = self.decoder.forward(&latent)?;
            let p = recon.len() as f64;
            let mut drec = recon.clone();
            let mut sample_rec = 0.0;
            for (dv, target) in drec.data.iter_mut().zip(&planes.data) {
                let d = *dv - target;
                sample_rec += d * d;
                *dv = self.cfg.lambda_rec * 2.0 * d / (p * n);
            }
            rec_loss += sample_rec / (p * n);
            let grad_latent_rec = self.decoder.backward_into(&dec_trace, &drec, &mut dec_grads)?;

            // Shared encoder sees both weighted branch gradients.
            let mut grad_latent = grad_latent_rec;
            for (g, gj) in grad_latent.data.iter_mut().zip(&grad_joint.data) {
                *g += gj;
            }
            self.encoder
                .backward_into(&enc_trace, &grad_latent, &mut enc_grads)?;
        }

        let report = LossReport {
            critic: critic_loss,
            rec: rec_loss,
            combined: self.cfg.lambda_rec * rec_loss + self.cfg.lambda_critic * critic_loss,
        };
        Ok((
            CombinedGrads {
                encoder: enc_grads,
                decoder: dec_grads,
                critic_head: head_grads,
            },
            report,
        ))
    }

    /// One Adam step on encoder, decoder and critic head along the combined
    /// loss. A non-finite loss aborts the step without touching parameters.
    pub fn combined_update(&mut self, batch: &[&Transition]) -> Result<LossReport, RlError> {
        let (grads, report) = self.combined_gradients(batch)?;
        if !report.combined.is_finite() {
            return Err(RlError::NonFiniteLoss("combined loss".into()));
        }
        adam_step(&mut self.encoder, &grads.encoder, &mut self.adam_encoder, self.cfg.lr_critic)?;
        adam_step(&mut self.decoder, &grads.decoder, &mut self.adam_decoder, self.cfg.lr_critic)?;
        adam_step(&mut self.critic_head, &grads.critic_head, &mut self.adam_critic, self.cfg.lr_critic)?;
        Ok(report)
    }

    /// Gradient (for the minimizer) of -1/n sum Q(s, mu(phi_s)) wrt the actor
    /// parameters: the pathwise deterministic policy gradient, negated.
    /// The encoder is frozen: it provides latents but receives no gradient.
    pub fn ddpg_actor_gradient(&self, batch: &[&Transition]) -> Result<NetGrads, RlError> {
        assert!(!batch.is_empty(), "batch must be nonempty");
        let n = batch.len() as f64;
        let mut actor_grads = NetGrads::zeros_like(&self.actor);
        for tr in batch {
            let latent = self.encoder.eval(&tr.obs_planes())?;
            let (action, actor_trace) = self.actor.forward(&latent)?;
            let joint = concat(&latent.data, &action.data);
            let (_, head_trace) = self.critic_head.forward(&joint)?;
            let ones = Tensor::new(vec![1], vec![1.0]).expect("consistent");
            let (_, grad_joint) = self.critic_head.backward(&head_trace, &ones)?;
            // Ascent on Q = descent on -Q.
            let grad_action = Tensor::new(
                vec![self.action_dim],
                grad_joint.data[self.latent_dim..]
                    .iter()
                    .map(|g| -g / n)
                    .collect(),
            )
            .expect("consistent");
            self.actor
                .backward_into(&actor_trace, &grad_action, &mut actor_grads)?;
        }
        Ok(actor_grads)
    }

    /// One Adam ascent step along the deterministic policy gradient.
    pub fn ddpg_actor_update(&mut self, batch: &[&Transition]) -> Result<(), RlError> {
        let actor_grads = self.ddpg_actor_gradient(batch)?;
        adam_step(&mut self.actor, &actor_grads, &mut self.adam_actor, self.cfg.lr_actor)?;
        Ok(())
    }

    /// Observed advantage of the stored action:
    /// A = r + gamma * (1 - done) * Q(s', mu(phi')) - Q(s, mu(phi)).
    pub fn advantage(&self, tr: &Transition) -> Result<f64, RlError> {
        let q_next = if tr.done {
            0.0
        } else {
            let mu_next = self.act(&tr.next_latent);
            self.q_from_planes(&tr.next_obs_planes(), &mu_next)?
        };
        let mu_cur = self.act(&tr.latent);
        let q_cur = self.q_from_planes(&tr.obs_planes(), &mu_cur)?;
        Ok(tr.reward + self.cfg.gamma * q_next - q_cur)
    }

    /// Conditional actor update: for each transition whose observed advantage
    /// is strictly positive, one plain gradient step on
    /// 1/2 * ||a_t - mu(phi_t)||^2 toward the stored action. Returns how many
    /// samples triggered updates.
    pub fn cacla_actor_update(&mut self, batch: &[&Transition]) -> Result<usize, RlError> {
        let mut applied = 0;
        for tr in batch {
            let adv = self.advantage(tr)?;
            if adv > 0.0 {
                let input =
                    Tensor::new(vec![tr.latent.len()], tr.latent.clone()).expect("consistent");
                let (mu, trace) = self.actor.forward(&input)?;
                let mut grad = mu.clone();
                for (g, a) in grad.data.iter_mut().zip(&tr.action) {
                    *g -= a; // d/dmu of 1/2 (a - mu)^2 is (mu - a)
                }
                let (grads, _) = self.actor.backward(&trace, &grad)?;
                self.actor.apply_gradients_sgd(&grads, self.cfg.lr_actor)?;
                applied += 1;
            }
        }
        Ok(applied)
    }

    /// theta' <- tau theta + (1 - tau) theta' for the critic path (encoder and
    /// head) and the actor target.
    pub fn soft_update_targets(&mut self) {
        let tau = self.cfg.tau;
        self.target_encoder.soft_update_from(&self.encoder, tau);
        self.target_critic_head
            .soft_update_from(&self.critic_head, tau);
        self.target_actor.soft_update_from(&self.actor, tau);
    }

    /// One checkpoint file per named network.
    pub fn save_checkpoints(&self, dir: impl AsRef<Path>) -> Result<(), RlError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| RlError::Io(e.to_string()))?;
        for (name, net) in [
            ("encoder", &self.encoder),
            ("decoder", &self.decoder),
            ("critic", &self.critic_head),
            ("actor", &self.actor),
            ("target_encoder", &self.target_encoder),
            ("target_critic", &self.target_critic_head),
            ("target_actor", &self.target_actor),
        ] {
            net.save_checkpoint(dir.join(format!("{name}.json")))?;
        }
        Ok(())
    }
}

impl crate::planner::Policy for Learner {
    fn act_latent(&self, latent: &[f64]) -> Vec<f64> {
        self.act(latent)
    }
}
