use curio_env::{EnvConfig, Environment, Outcome, PixelReacher, RewardMode};
use curio_rl::*;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1u64);
    let algo = match std::env::args().nth(2).as_deref() {
        Some("ddpg") => Algo::Ddpg,
        _ => Algo::Cacla,
    };
    let cmc = std::env::args().nth(3).as_deref() == Some("cmc");
    let episodes: usize = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(600);

    let env_cfg = EnvConfig {
        image_height: 32,
        image_width: 32,
        channels: 3,
        reward_mode: RewardMode::Sparse,
        episode_length: 30,
        max_step: 20.0,
        seed,
    };
    let learner = build_learner(
        NetPreset::Desk,
        [32, 32, 3],
        8,
        3,
        LearnerConfig {
            gamma: 0.99,
            tau: 1e-3,
            lambda_rec: 0.1,
            lambda_critic: 1.0,
            lr_critic: 1e-3,
            lr_actor: 1e-3,
        },
        seed,
    )
    .unwrap();
    let dynamics = DynamicsModel::new(8, 3, 64, 1e-3, seed.wrapping_add(5));
    let curiosity = Curiosity::new(40, 20, -1.0, 0.1);
    let mut ctl = Controller::new(
        PixelReacher::new(env_cfg.clone()).unwrap(),
        learner,
        dynamics,
        curiosity,
        20_000,
        ControllerConfig {
            algo,
            cmc,
            planner: PlannerConfig {
                horizon: 3,
                iterations: 10,
                update_rate: 0.05,
                target_return: 1.0,
            },
            noise_std: 1.0,
            minibatch: 8,
            n_ac: 1,
            n_model: 2,
            warmup: 8,
            episodes,
            seed,
            reencode_latents: false,
            collect_trace: false,
        },
    );
    let result = ctl.run().unwrap();
    let n = result.episodes.len();
    let late: f64 = result.episodes[n - n / 3..]
        .iter()
        .map(|m| m.return_ext)
        .sum::<f64>()
        / (n / 3) as f64;
    println!("training return (last third): {late:.3}");

    // Noise-free exploitation: greedy actor on fresh episodes.
    let mut eval_env = PixelReacher::new(EnvConfig { seed: seed + 1000, ..env_cfg }).unwrap();
    let mut succ = 0;
    let mut lens = 0;
    let trials = 200;
    for ep in 0..trials {
        let mut obs = eval_env.reset_with(ep);
        for t in 0..30 {
            let latent = ctl.learner.encode(&obs).unwrap();
            let action = ctl.learner.act(&latent.data);
            let r = eval_env.step(&action);
            if r.done {
                if r.info.outcome == Outcome::Success {
                    succ += 1;
                    lens += t + 1;
                }
                break;
            }
            obs = r.observation;
        }
    }
    println!(
        "greedy eval: success {:.3}, mean len {:.1}",
        succ as f64 / trials as f64,
        lens as f64 / succ.max(1) as f64
    );

    // Planner-greedy eval (first action of optimized plan, no noise).
    let mut succ = 0;
    for ep in 0..trials {
        let mut obs = eval_env.reset_with(10_000 + ep);
        for _ in 0..30 {
            let latent = ctl.learner.encode(&obs).unwrap();
            let proposal = propose(&ctl.dynamics, &ctl.learner, &latent.data, 3);
            let report = optimize(
                &ctl.dynamics,
                proposal,
                &latent.data,
                &PlannerConfig {
                    horizon: 3,
                    iterations: 10,
                    update_rate: 0.05,
                    target_return: 1.0,
                },
            );
            let action = first_action(&report.plan).to_vec();
            let r = eval_env.step(&action);
            if r.done {
                if r.info.outcome == Outcome::Success {
                    succ += 1;
                }
                break;
            }
            obs = r.observation;
        }
    }
    println!("planner eval: success {:.3}", succ as f64 / trials as f64);
}
