//! Network presets for the two observation scales.
//!
//! The desk preset keeps CPU training runs cheap: a pointwise color conv
//! followed by two 3x3 convs with 2x2 mean-pools between them, a tanh latent,
//! and a mirrored decoder. The paper-scale preset is a larger stack (seven
//! convolutions and two dense layers across the autoencoder, 32-dim latent)
//! selectable from configuration.

use crate::learner::{Learner, LearnerConfig};
use crate::RlError;
use curio_nn::{Activation, LayerSpec, Network};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetPreset {
    Desk,
    Paper,
}

fn conv(c: usize, h: usize, w: usize, f: usize, k: usize) -> LayerSpec {
    LayerSpec::Conv2d {
        in_channels: c,
        in_height: h,
        in_width: w,
        filters: f,
        kernel: k,
        stride: 1,
        zero_pad: true,
        activation: Activation::Relu,
    }
}

fn pool(c: usize, h: usize, w: usize) -> LayerSpec {
    LayerSpec::MeanPool2 {
        channels: c,
        in_height: h,
        in_width: w,
    }
}

fn upsample(c: usize, h: usize, w: usize) -> LayerSpec {
    LayerSpec::UpsampleNearest2 {
        channels: c,
        in_height: h,
        in_width: w,
    }
}

fn dense(i: usize, o: usize, a: Activation) -> LayerSpec {
    LayerSpec::Dense {
        inputs: i,
        outputs: o,
        activation: a,
    }
}

/// Encoder/decoder specs for the given preset and observation shape [H, W, C].
pub fn autoencoder_specs(
    preset: NetPreset,
    obs_shape: [usize; 3],
    latent_dim: usize,
) -> Result<(Vec<LayerSpec>, Vec<LayerSpec>), RlError> {
    let [h, w, c] = obs_shape;
    if h % 4 != 0 || w % 4 != 0 {
        return Err(RlError::Config(format!(
            "image extents must be divisible by 4, got {h}x{w}"
        )));
    }
    match preset {
        NetPreset::Desk => {
            let bottleneck = (h / 4) * (w / 4) * 4;
            let encoder = vec![
                conv(c, h, w, 4, 1),
                pool(4, h, w),
                conv(4, h / 2, w / 2, 4, 3),
                pool(4, h / 2, w / 2),
                conv(4, h / 4, w / 4, 4, 3),
                dense(bottleneck, latent_dim, Activation::Tanh),
            ];
            let decoder = vec![
                dense(latent_dim, bottleneck, Activation::Relu),
                conv(4, h / 4, w / 4, 4, 3),
                upsample(4, h / 4, w / 4),
                conv(4, h / 2, w / 2, 4, 3),
                upsample(4, h / 2, w / 2),
                conv(4, h, w, c, 1),
            ];
            Ok((encoder, decoder))
        }
        NetPreset::Paper => {
            let bottleneck_enc = (h / 4) * (w / 4) * 32;
            let bottleneck_dec = (h / 4) * (w / 4) * 16;
            let encoder = vec![
                conv(c, h, w, 8, 3),
                pool(8, h, w),
                conv(8, h / 2, w / 2, 16, 3),
                pool(16, h / 2, w / 2),
                conv(16, h / 4, w / 4, 16, 3),
                conv(16, h / 4, w / 4, 32, 3),
                dense(bottleneck_enc, latent_dim, Activation::Relu),
            ];
            let decoder = vec![
                dense(latent_dim, bottleneck_dec, Activation::Relu),
                conv(16, h / 4, w / 4, 16, 3),
                upsample(16, h / 4, w / 4),
                conv(16, h / 2, w / 2, 8, 3),
                upsample(8, h / 2, w / 2),
                conv(8, h, w, c, 3),
            ];
            Ok((encoder, decoder))
        }
    }
}

/// Critic head: dense(latent ++ action) -> 64 relu -> 1 linear.
pub fn critic_head_spec(latent_dim: usize, action_dim: usize) -> Vec<LayerSpec> {
    vec![
        dense(latent_dim + action_dim, 64, Activation::Relu),
        dense(64, 1, Activation::Linear),
    ]
}

/// Actor: two dense layers ending in tanh.
pub fn actor_spec(latent_dim: usize, action_dim: usize) -> Vec<LayerSpec> {
    vec![
        dense(latent_dim, 32, Activation::Relu),
        dense(32, action_dim, Activation::Tanh),
    ]
}

/// Builds the full learner for an observation shape. Component seeds are
/// derived from the run seed so distinct networks get distinct streams.
pub fn build_learner(
    preset: NetPreset,
    obs_shape: [usize; 3],
    latent_dim: usize,
    action_dim: usize,
    cfg: LearnerConfig,
    seed: u64,
) -> Result<Learner, RlError> {
    let (enc_spec, dec_spec) = autoencoder_specs(preset, obs_shape, latent_dim)?;
    let encoder = Network::new(enc_spec, seed.wrapping_add(1))?;
    let decoder = Network::new(dec_spec, seed.wrapping_add(2))?;
    let critic = Network::new(critic_head_spec(latent_dim, action_dim), seed.wrapping_add(3))?;
    let actor = Network::new(actor_spec(latent_dim, action_dim), seed.wrapping_add(4))?;
    Learner::new(encoder, decoder, critic, actor, obs_shape, action_dim, cfg)
}

/// Dynamics model hidden width (one hidden layer of tanh units).
pub const DYNAMICS_HIDDEN: usize = 64;
