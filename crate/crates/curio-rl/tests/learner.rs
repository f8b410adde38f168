//! Learner contracts: encoding, TD targets, the combined loss and its
//! gradient structure, both actor-update rules, and target tracking.

mod common;

use common::*;
use curio_nn::{relative_error, Activation, Network, Tensor};
use curio_rl::{Learner, LearnerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_encoder_maps_everything_to_zero_latent() {
    let mut learner = tiny_learner(LearnerConfig::default(), 5);
    zero_params(learner.nets_mut_for_tests().0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let obs = random_obs(TINY_OBS, &mut rng);
    let z = learner.encode(&obs).unwrap();
    assert!(z.data.iter().all(|&v| v == 0.0));
}

#[test]
fn encoding_is_deterministic() {
    let learner = tiny_learner(LearnerConfig::default(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let obs = random_obs(TINY_OBS, &mut rng);
    assert_eq!(learner.encode(&obs).unwrap().data, learner.encode(&obs).unwrap().data);
}

#[test]
fn actor_outputs_stay_in_range_and_are_deterministic() {
    let mut learner = tiny_learner(LearnerConfig::default(), 7);
    {
        let actor = learner.nets_mut_for_tests().3;
        for p in actor.params_mut() {
            p.weight.scale(25.0); // exaggerate weights to push tanh to saturation
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let latent: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let a = learner.act(&latent);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(a, learner.act(&latent));
    }
}

#[test]
fn zero_actor_outputs_zero_action() {
    let mut learner = tiny_learner(LearnerConfig::default(), 8);
    zero_params(learner.nets_mut_for_tests().3);
    assert_eq!(learner.act(&[0.3, -0.2, 0.9]), vec![0.0]);
}

#[test]
fn td_target_terminal_and_myopic_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let learner = tiny_learner(LearnerConfig::default(), 9);
    let mut tr = random_tiny_transition(&mut rng, true);
    tr.reward = 1.0;
    assert_eq!(learner.td_target(&tr).unwrap(), 1.0);

    let cfg = LearnerConfig {
        gamma: 0.0,
        ..LearnerConfig::default()
    };
    let learner = tiny_learner(cfg, 9);
    for done in [false, true] {
        let tr = random_tiny_transition(&mut rng, done);
        assert!((learner.td_target(&tr).unwrap() - tr.reward).abs() < 1e-15);
    }
}

#[test]
fn td_target_bootstraps_with_planted_target_critic() {
    // Zero-weight critic head with output bias 0.5 -> Q' = 0.5 everywhere.
    let encoder = Network::new(vec![dense(4, 3, Activation::Tanh)], 1).unwrap();
    let decoder = Network::new(vec![dense(3, 4, Activation::Linear)], 2).unwrap();
    let mut critic = Network::new(
        vec![dense(4, 8, Activation::Relu), dense(8, 1, Activation::Linear)],
        3,
    )
    .unwrap();
    zero_params(&mut critic);
    critic.params_mut()[1].bias.data[0] = 0.5;
    let actor = Network::new(vec![dense(3, 1, Activation::Tanh)], 4).unwrap();
    let cfg = LearnerConfig {
        gamma: 0.99,
        ..LearnerConfig::default()
    };
    let learner = Learner::new(encoder, decoder, critic, actor, TINY_OBS, 1, cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tr = random_tiny_transition(&mut rng, false);
    tr.reward = 0.0;
    let y = learner.td_target(&tr).unwrap();
    assert!((y - 0.495).abs() < 1e-12, "y = {y}");
}

#[test]
fn identity_autoencoder_has_zero_reconstruction_loss() {
    let mut encoder = Network::new(vec![dense(4, 4, Activation::Linear)], 1).unwrap();
    let mut decoder = Network::new(vec![dense(4, 4, Activation::Linear)], 2).unwrap();
    for net in [&mut encoder, &mut decoder] {
        zero_params(net);
        for i in 0..4 {
            net.params_mut()[0].weight.data[i * 4 + i] = 1.0;
        }
    }
    let critic = Network::new(vec![dense(5, 1, Activation::Linear)], 3).unwrap();
    let actor = Network::new(vec![dense(4, 1, Activation::Tanh)], 4).unwrap();
    let learner =
        Learner::new(encoder, decoder, critic, actor, TINY_OBS, 1, LearnerConfig::default())
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let obs = random_obs(TINY_OBS, &mut rng);
    let (loss, _, _) = learner.reconstruction_gradients(&obs).unwrap();
    assert!(loss < 1e-28, "loss {loss}");
}

#[test]
fn reconstruction_gradients_match_finite_differences() {
    let learner = tiny_learner(LearnerConfig::default(), 11);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let obs = random_obs(TINY_OBS, &mut rng);
    let (_, enc_grads, dec_grads) = learner.reconstruction_gradients(&obs).unwrap();

    // Numeric loss through standalone networks.
    let planes = curio_rl::obs_to_planes(&obs);
    let rec_loss = |enc: &Network, dec: &Network| {
        let z = enc.eval(&planes).unwrap();
        let r = dec.eval(&z).unwrap().reshaped(planes.shape.clone()).unwrap();
        curio_nn::mse(&r, &planes).unwrap().0
    };
    let eps = 1e-6;
    let mut max_err: f64 = 0.0;
    for which in 0..2 {
        let grads = if which == 0 { &enc_grads } else { &dec_grads };
        for li in 0..grads.layers.len() {
            for idx in 0..grads.layers[li].weight.len() {
                let mut enc = learner.encoder().clone();
                let mut dec = learner.decoder().clone();
                {
                    let net = if which == 0 { &mut enc } else { &mut dec };
                    net.params_mut()[li].weight.data[idx] += eps;
                }
                let plus = rec_loss(&enc, &dec);
                {
                    let net = if which == 0 { &mut enc } else { &mut dec };
                    net.params_mut()[li].weight.data[idx] -= 2.0 * eps;
                }
                let minus = rec_loss(&enc, &dec);
                let cd = (plus - minus) / (2.0 * eps);
                max_err = max_err.max(relative_error(grads.layers[li].weight.data[idx], cd));
            }
        }
    }
    assert!(max_err < 1e-4, "max relative error {max_err}");
}

#[test]
fn reconstruction_loss_decreases_when_overfitting_small_batch() {
    let mut learner = tiny_learner(LearnerConfig::default(), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let images: Vec<Tensor> = (0..10).map(|_| random_obs(TINY_OBS, &mut rng)).collect();
    let transitions: Vec<curio_rl::Transition> = images
        .iter()
        .map(|o| transition(o, vec![0.0; 3], vec![0.0], 0.0, 0.0, o, vec![0.0; 3], true))
        .collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let first = learner.combined_update(&batch).unwrap().rec;
    let mut last = first;
    for _ in 0..199 {
        last = learner.combined_update(&batch).unwrap().rec;
    }
    assert!(
        last < 0.5 * first,
        "reconstruction did not improve: {first} -> {last}"
    );
}

#[test]
fn combined_gradient_is_weighted_sum_of_branches() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let transitions: Vec<curio_rl::Transition> =
        (0..6).map(|i| random_tiny_transition(&mut rng, i % 3 == 0)).collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();

    let build = |lambda_rec: f64, lambda_critic: f64| {
        tiny_learner(
            LearnerConfig {
                lambda_rec,
                lambda_critic,
                ..LearnerConfig::default()
            },
            33,
        )
    };
    let (g_rec, _) = build(1.0, 0.0).combined_gradients(&batch).unwrap();
    let (g_critic, _) = build(0.0, 1.0).combined_gradients(&batch).unwrap();
    let (lr, lc) = (0.1, 1.0);
    let (g_mix, _) = build(lr, lc).combined_gradients(&batch).unwrap();

    for (mix, (a, b)) in [
        (&g_mix.encoder, (&g_rec.encoder, &g_critic.encoder)),
        (&g_mix.decoder, (&g_rec.decoder, &g_critic.decoder)),
        (&g_mix.critic_head, (&g_rec.critic_head, &g_critic.critic_head)),
    ] {
        for li in 0..mix.layers.len() {
            for idx in 0..mix.layers[li].weight.len() {
                let want = lr * a.layers[li].weight.data[idx] + lc * b.layers[li].weight.data[idx];
                let got = mix.layers[li].weight.data[idx];
                assert!(
                    (got - want).abs() < 1e-10,
                    "weight mismatch {got} vs {want}"
                );
            }
            for idx in 0..mix.layers[li].bias.len() {
                let want = lr * a.layers[li].bias.data[idx] + lc * b.layers[li].bias.data[idx];
                let got = mix.layers[li].bias.data[idx];
                assert!((got - want).abs() < 1e-10, "bias mismatch {got} vs {want}");
            }
        }
    }
}

#[test]
fn zero_critic_weight_leaves_critic_head_untouched() {
    let mut learner = tiny_learner(
        LearnerConfig {
            lambda_critic: 0.0,
            ..LearnerConfig::default()
        },
        13,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let transitions: Vec<curio_rl::Transition> =
        (0..4).map(|_| random_tiny_transition(&mut rng, false)).collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let before = params_snapshot(learner.critic_head());
    learner.combined_update(&batch).unwrap();
    assert_eq!(before, params_snapshot(learner.critic_head()));
}

#[test]
fn ddpg_ignores_action_insensitive_critic() {
    let mut learner = tiny_learner(LearnerConfig::default(), 14);
    {
        // Zero the critic's first-layer weights on the action input column.
        let critic = learner.nets_mut_for_tests().2;
        let w = &mut critic.params_mut()[0].weight;
        let inputs = 4; // latent 3 + action 1
        for row in 0..8 {
            w.data[row * inputs + 3] = 0.0;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let transitions: Vec<curio_rl::Transition> =
        (0..4).map(|_| random_tiny_transition(&mut rng, false)).collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let before = params_snapshot(learner.actor());
    learner.ddpg_actor_update(&batch).unwrap();
    assert_eq!(before, params_snapshot(learner.actor()));
}

#[test]
fn ddpg_ascends_planted_concave_critic() {
    // Critic head computes -(|a - a_star|) exactly with two relu units;
    // ascent must move the (constant) actor output toward a_star.
    let a_star = 0.3;
    let encoder = Network::new(vec![dense(4, 3, Activation::Tanh)], 1).unwrap();
    let decoder = Network::new(vec![dense(3, 4, Activation::Linear)], 2).unwrap();
    let mut critic = Network::new(
        vec![dense(4, 2, Activation::Relu), dense(2, 1, Activation::Linear)],
        3,
    )
    .unwrap();
    zero_params(&mut critic);
    {
        let p = critic.params_mut();
        // unit 0: relu(a - a_star), unit 1: relu(a_star - a); action is input 3
        p[0].weight.data[3] = 1.0;
        p[0].bias.data[0] = -a_star;
        p[0].weight.data[4 + 3] = -1.0;
        p[0].bias.data[1] = a_star;
        p[1].weight.data[0] = -1.0;
        p[1].weight.data[1] = -1.0;
    }
    let mut actor = Network::new(
        vec![dense(3, 4, Activation::Relu), dense(4, 1, Activation::Tanh)],
        4,
    )
    .unwrap();
    zero_params(&mut actor);
    actor.params_mut()[1].bias.data[0] = -0.5; // mu = tanh(-0.5) < a_star
    let mut learner = Learner::new(
        encoder,
        decoder,
        critic,
        actor,
        TINY_OBS,
        1,
        LearnerConfig {
            lr_actor: 1e-2,
            ..LearnerConfig::default()
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let transitions: Vec<curio_rl::Transition> =
        (0..4).map(|_| random_tiny_transition(&mut rng, false)).collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let before = learner.act(&[0.0, 0.0, 0.0])[0];
    learner.ddpg_actor_update(&batch).unwrap();
    let after = learner.act(&[0.0, 0.0, 0.0])[0];
    assert!(after > before, "actor output should increase: {before} -> {after}");
}

#[test]
fn ddpg_pathwise_gradient_matches_finite_differences() {
    let learner = tiny_learner(LearnerConfig::default(), 15);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let transitions: Vec<curio_rl::Transition> =
        (0..5).map(|_| random_tiny_transition(&mut rng, false)).collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let grads = learner.ddpg_actor_gradient(&batch).unwrap();

    // J(theta) = 1/n sum Q(s_i, mu(f(s_i))); the update gradient is -dJ.
    let mean_q = |actor: &Network| {
        let mut sum = 0.0;
        for tr in &batch {
            let latent = learner.encode(&tr.obs()).unwrap();
            let action = actor.eval(&latent).unwrap();
            let mut joint = latent.data.clone();
            joint.extend_from_slice(&action.data);
            let q = learner
                .critic_head()
                .eval(&Tensor::new(vec![4], joint).unwrap())
                .unwrap();
            sum += q.data[0];
        }
        sum / batch.len() as f64
    };
    let eps = 1e-6;
    let mut max_err: f64 = 0.0;
    for li in 0..grads.layers.len() {
        for idx in 0..grads.layers[li].weight.len() {
            let mut actor = learner.actor().clone();
            actor.params_mut()[li].weight.data[idx] += eps;
            let plus = mean_q(&actor);
            actor.params_mut()[li].weight.data[idx] -= 2.0 * eps;
            let minus = mean_q(&actor);
            let cd = (plus - minus) / (2.0 * eps);
            max_err = max_err.max(relative_error(grads.layers[li].weight.data[idx], -cd));
        }
    }
    assert!(max_err < 1e-4, "max relative error {max_err}");
}

#[test]
fn cacla_gate_blocks_non_positive_advantages() {
    let mut learner = tiny_learner(LearnerConfig::default(), 16);
    zero_params(learner.nets_mut_for_tests().2); // Q = 0 everywhere
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let transitions: Vec<curio_rl::Transition> = (0..6)
        .map(|_| {
            let mut tr = random_tiny_transition(&mut rng, true);
            tr.reward = -0.5; // advantage = reward - 0 < 0
            tr
        })
        .collect();
    let batch: Vec<&curio_rl::Transition> = transitions.iter().collect();
    let before = params_snapshot(learner.actor());
    let applied = learner.cacla_actor_update(&batch).unwrap();
    assert_eq!(applied, 0);
    assert_eq!(before, params_snapshot(learner.actor()));
}

#[test]
fn cacla_zero_advantage_is_not_an_update() {
    let mut learner = tiny_learner(LearnerConfig::default(), 17);
    zero_params(learner.nets_mut_for_tests().2);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut tr = random_tiny_transition(&mut rng, true);
    tr.reward = 0.0; // advantage exactly 0
    let before = params_snapshot(learner.actor());
    let applied = learner.cacla_actor_update(&[&tr]).unwrap();
    assert_eq!(applied, 0);
    assert_eq!(before, params_snapshot(learner.actor()));
}

#[test]
fn cacla_single_positive_sample_matches_closed_form() {
    // Linear single-layer actor: delta_theta = alpha (a - mu(phi)) phi^T.
    let lr = 1e-3;
    let encoder = Network::new(vec![dense(4, 3, Activation::Tanh)], 1).unwrap();
    let decoder = Network::new(vec![dense(3, 4, Activation::Linear)], 2).unwrap();
    let mut critic = Network::new(vec![dense(4, 1, Activation::Linear)], 3).unwrap();
    zero_params(&mut critic);
    let actor = Network::new(vec![dense(3, 1, Activation::Linear)], 4).unwrap();
    let mut learner = Learner::new(
        encoder,
        decoder,
        critic,
        actor,
        TINY_OBS,
        1,
        LearnerConfig {
            lr_actor: lr,
            ..LearnerConfig::default()
        },
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut tr = random_tiny_transition(&mut rng, true);
    tr.reward = 1.0; // advantage = 1 > 0 with the zero critic
    let phi = tr.latent.clone();
    let mu = learner.act(&phi)[0];
    let w_before = learner.actor().params()[0].weight.data.clone();
    let b_before = learner.actor().params()[0].bias.data[0];

    let applied = learner.cacla_actor_update(&[&tr]).unwrap();
    assert_eq!(applied, 1);

    let w_after = &learner.actor().params()[0].weight.data;
    let b_after = learner.actor().params()[0].bias.data[0];
    let delta = lr * (tr.action[0] - mu);
    for i in 0..3 {
        let want = w_before[i] + delta * phi[i];
        assert!(
            (w_after[i] - want).abs() < 1e-10,
            "w[{i}]: {} vs {want}",
            w_after[i]
        );
    }
    assert!((b_after - (b_before + delta)).abs() < 1e-10);
}

#[test]
fn soft_updates_track_sources_geometrically() {
    let mut learner = tiny_learner(
        LearnerConfig {
            tau: 1e-3,
            ..LearnerConfig::default()
        },
        18,
    );
    // Perturb the online nets so targets differ.
    {
        let (enc, _, critic, actor) = learner.nets_mut_for_tests();
        for net in [enc, critic, actor] {
            for p in net.params_mut() {
                for v in p.weight.data.iter_mut() {
                    *v += 0.37;
                }
            }
        }
    }
    let theta = params_snapshot(learner.encoder());
    let (t_enc, _, _) = learner.target_nets();
    let theta_t0 = params_snapshot(t_enc);

    let n = 1000;
    for _ in 0..n {
        learner.soft_update_targets();
    }
    let (t_enc, _, _) = learner.target_nets();
    let theta_tn = params_snapshot(t_enc);
    let shrink = (1.0 - 1e-3_f64).powi(n);
    for i in 0..theta.len() {
        let want = theta[i] + shrink * (theta_t0[i] - theta[i]);
        assert!(
            (theta_tn[i] - want).abs() < 1e-10,
            "component {i}: {} vs {want}",
            theta_tn[i]
        );
    }
}

#[test]
fn soft_update_tau_one_copies_sources() {
    let mut learner = tiny_learner(
        LearnerConfig {
            tau: 1.0,
            ..LearnerConfig::default()
        },
        19,
    );
    {
        let (enc, _, _, _) = learner.nets_mut_for_tests();
        enc.params_mut()[0].weight.data[0] = 5.0;
    }
    learner.soft_update_targets();
    let (t_enc, _, _) = learner.target_nets();
    assert_eq!(params_snapshot(learner.encoder()), params_snapshot(t_enc));
}

#[test]
fn checkpoints_one_file_per_network() {
    let dir = tempfile::tempdir().unwrap();
    let learner = tiny_learner(LearnerConfig::default(), 20);
    learner.save_checkpoints(dir.path()).unwrap();
    for name in [
        "encoder",
        "decoder",
        "critic",
        "actor",
        "target_encoder",
        "target_critic",
        "target_actor",
    ] {
        let path = dir.path().join(format!("{name}.json"));
        assert!(path.exists(), "missing {name}.json");
        let net = Network::load_checkpoint(&path).unwrap();
        assert!(net.num_params() > 0);
    }
}
