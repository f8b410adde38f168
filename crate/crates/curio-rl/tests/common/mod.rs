use curio_nn::{Activation, LayerSpec, Network, Tensor};
use curio_rl::{Learner, LearnerConfig, Transition};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dense(i: usize, o: usize, a: Activation) -> LayerSpec {
    LayerSpec::Dense {
        inputs: i,
        outputs: o,
        activation: a,
    }
}

/// Quantizes arbitrary values into a valid [H, W, C] observation.
pub fn quantized_obs(shape: [usize; 3], values: &[f64]) -> Tensor {
    let data: Vec<f64> = values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

pub fn random_obs(shape: [usize; 3], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product::<usize>();
    let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    quantized_obs(shape, &values)
}

/// Small dense learner over 2x2x1 observations: latent 3, 1-d actions.
pub fn tiny_learner(cfg: LearnerConfig, seed: u64) -> Learner {
    let encoder = Network::new(vec![dense(4, 3, Activation::Tanh)], seed + 1).unwrap();
    let decoder = Network::new(vec![dense(3, 4, Activation::Linear)], seed + 2).unwrap();
    let critic = Network::new(
        vec![dense(4, 8, Activation::Relu), dense(8, 1, Activation::Linear)],
        seed + 3,
    )
    .unwrap();
    let actor = Network::new(
        vec![dense(3, 8, Activation::Relu), dense(8, 1, Activation::Tanh)],
        seed + 4,
    )
    .unwrap();
    Learner::new(encoder, decoder, critic, actor, [2, 2, 1], 1, cfg).unwrap()
}

pub const TINY_OBS: [usize; 3] = [2, 2, 1];

#[allow(clippy::too_many_arguments)]
pub fn transition(
    obs: &Tensor,
    latent: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    reward_ext: f64,
    next_obs: &Tensor,
    next_latent: Vec<f64>,
    done: bool,
) -> Transition {
    Transition::new(obs, latent, action, reward, reward_ext, next_obs, next_latent, done)
}

/// Random well-formed transition for the tiny learner.
pub fn random_tiny_transition(rng: &mut ChaCha8Rng, done: bool) -> Transition {
    let obs = random_obs(TINY_OBS, rng);
    let next = random_obs(TINY_OBS, rng);
    let latent: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let next_latent: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let action = vec![rng.gen_range(-1.0..1.0)];
    let reward = rng.gen_range(-1.0..1.0);
    let reward_ext = rng.gen_range(-1.0..1.0);
    transition(&obs, latent, action, reward, reward_ext, &next, next_latent, done)
}

pub fn zero_params(net: &mut Network) {
    for p in net.params_mut() {
        p.weight.data.fill(0.0);
        p.bias.data.fill(0.0);
    }
}

pub fn params_snapshot(net: &Network) -> Vec<f64> {
    net.params()
        .iter()
        .flat_map(|p| p.weight.data.iter().chain(p.bias.data.iter()).copied())
        .collect()
}
