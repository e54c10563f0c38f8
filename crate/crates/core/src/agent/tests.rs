use ndarray::{arr1, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::env::{generate_channels, ActionVector, StateVector};
use crate::nn::Layer;

fn small_cfg() -> SystemConfig {
    SystemConfig::new(1, 1, 1, 10.0).unwrap()
}

fn small_hyper() -> Hyperparams {
    Hyperparams {
        hidden_width: Some(16),
        episodes: 1,
        steps_per_episode: 50,
        ..Hyperparams::default()
    }
}

fn bundle(seed: u64, hyper: &Hyperparams) -> AgentBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AgentBundle::new(&small_cfg(), hyper, &mut rng).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_experience(rng: &mut ChaCha8Rng, cfg: &SystemConfig) -> Experience {
    let (ds, da) = (cfg.state_dim(), cfg.action_dim());
    Experience {
        state: StateVector(random_vec(rng, ds)),
        action: ActionVector(random_vec(rng, da)),
        reward: rng.random_range(0.0..5.0),
        next_state: StateVector(random_vec(rng, ds)),
    }
}

fn flat(net: &DenseNet) -> Vec<f64> {
    net.param_slices().concat()
}

fn zero_params(net: &mut DenseNet) {
    for s in net.param_slices_mut() {
        s.fill(0.0);
    }
}

#[test]
fn targets_start_equal_to_training_nets() {
    let b = bundle(0, &small_hyper());
    assert_eq!(flat(&b.actor), flat(&b.actor_target));
    assert_eq!(flat(&b.critic), flat(&b.critic_target));
    assert_eq!(b.critic.aux(), Some((1, small_cfg().action_dim())));
}

#[test]
fn rejects_narrow_hidden_layers() {
    let hyper = Hyperparams {
        hidden_width: Some(12),
        ..small_hyper()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(AgentBundle::new(&small_cfg(), &hyper, &mut rng).is_err());
}

#[test]
fn hyperparam_validation() {
    assert!(Hyperparams::default().validate().is_ok());
    let bad = [
        Hyperparams { gamma: 1.5, ..Hyperparams::default() },
        Hyperparams { tau_a: 1.5, ..Hyperparams::default() },
        Hyperparams { minibatch: 0, ..Hyperparams::default() },
        Hyperparams { minibatch: 20, buffer_capacity: 10, ..Hyperparams::default() },
        Hyperparams { exploration_std: -0.1, ..Hyperparams::default() },
    ];
    for h in bad {
        assert!(h.validate().is_err(), "{h:?}");
    }
}

#[test]
fn noiseless_selection_is_deterministic_and_feasible() {
    let b = bundle(1, &small_hyper());
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = StateVector(random_vec(&mut rng, cfg.state_dim()));
    let (raw1, a1) = b.select_action(&s, &mut rng, 0.0).unwrap();
    let (raw2, a2) = b.select_action(&s, &mut rng, 0.0).unwrap();
    assert_eq!(raw1, raw2);
    assert_eq!(a1, a2);
    assert!(a1.is_feasible(cfg.pt_linear(), 1e-9, 1e-9));
    // Large noise still projects to a feasible action.
    for _ in 0..20 {
        let (_, a) = b.select_action(&s, &mut rng, 50.0).unwrap();
        assert!(a.is_feasible(cfg.pt_linear(), 1e-9, 1e-9));
    }
}

#[test]
fn exploration_noise_is_calibrated() {
    let b = bundle(3, &small_hyper());
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = StateVector(random_vec(&mut rng, cfg.state_dim()));
    let (clean, _) = b.select_action(&s, &mut rng, 0.0).unwrap();
    let draws: Vec<Vec<f64>> = (0..100)
        .map(|_| b.select_action(&s, &mut rng, 0.1).unwrap().0 .0)
        .collect();
    for j in 0..cfg.action_dim() {
        let devs: Vec<f64> = draws.iter().map(|d| d[j] - clean.0[j]).collect();
        let mean = devs.iter().sum::<f64>() / 100.0;
        let var = devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 99.0;
        assert!((var.sqrt() - 0.1).abs() < 0.02, "component {j}: {}", var.sqrt());
    }
}

#[test]
fn exploration_anneals_per_episode() {
    let mut b = bundle(0, &small_hyper());
    assert_eq!(b.current_exploration_std(), 0.1);
    b.episodes_done = 2;
    assert!((b.current_exploration_std() - 0.1 * 0.99 * 0.99).abs() < 1e-15);
}

#[test]
fn target_value_without_bootstrap() {
    let hyper = Hyperparams {
        gamma: 0.0,
        ..small_hyper()
    };
    let b = bundle(5, &hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = StateVector(random_vec(&mut rng, small_cfg().state_dim()));
    assert_eq!(b.critic_target_value(2.5, &s).unwrap(), 2.5);

    let mut b = bundle(5, &small_hyper());
    zero_params(&mut b.critic_target);
    assert_eq!(b.critic_target_value(2.5, &s).unwrap(), 2.5);
}

#[test]
fn target_value_recomposes_target_nets() {
    let b = bundle(7, &small_hyper());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_vec(&mut rng, small_cfg().state_dim());
    let a = b.actor_target.predict(&s, None, Mode::Eval).unwrap();
    let q = b.critic_target.predict(&s, Some(&a), Mode::Eval).unwrap()[0];
    let y = b.critic_target_value(1.25, &StateVector(s)).unwrap();
    assert!((y - (1.25 + 0.99 * q)).abs() < 1e-12);
}

fn train_mode_q(net: &DenseNet, batch: &[&Experience]) -> Vec<f64> {
    let ds = batch[0].state.len();
    let da = batch[0].action.len();
    let s = Array2::from_shape_fn((batch.len(), ds), |(i, j)| batch[i].state.0[j]);
    let a = Array2::from_shape_fn((batch.len(), da), |(i, j)| batch[i].action.0[j]);
    net.forward(s.view(), Some(a.view()), Mode::Train).unwrap().0.column(0).to_vec()
}

#[test]
fn consistent_batch_has_zero_loss_and_no_step() {
    let hyper = Hyperparams {
        gamma: 0.0,
        ..small_hyper()
    };
    let mut b = bundle(9, &hyper);
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut batch: Vec<Experience> = (0..16).map(|_| random_experience(&mut rng, &cfg)).collect();
    let q = train_mode_q(&b.critic, &batch.iter().collect::<Vec<_>>());
    for (e, q) in batch.iter_mut().zip(q) {
        e.reward = q;
    }
    let before = flat(&b.critic);
    let loss = b.update_critic(&batch.iter().collect::<Vec<_>>()).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(flat(&b.critic), before);
}

#[test]
fn single_item_loss_is_squared_td_error() {
    let hyper = Hyperparams {
        minibatch: 1,
        ..small_hyper()
    };
    let mut b = bundle(11, &hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let e = random_experience(&mut rng, &small_cfg());
    let y = b.critic_target_value(e.reward, &e.next_state).unwrap();
    let q = train_mode_q(&b.critic, &[&e])[0];
    let loss = b.update_critic(&[&e]).unwrap();
    assert!((loss - (y - q).powi(2)).abs() < 1e-12);
}

#[test]
fn critic_step_reduces_loss_on_fixed_batch() {
    let mut b = bundle(13, &small_hyper());
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let batch: Vec<Experience> = (0..16).map(|_| random_experience(&mut rng, &small_cfg())).collect();
    let refs: Vec<&Experience> = batch.iter().collect();
    let target_before = flat(&b.critic_target);
    let first = b.update_critic(&refs).unwrap();
    let second = b.update_critic(&refs).unwrap();
    assert!(second < first, "{first} -> {second}");
    assert_eq!(flat(&b.critic_target), target_before);
    assert!(b.update_critic(&refs[..15]).is_err());
}

#[test]
fn flat_critic_leaves_actor_unchanged() {
    let mut b = bundle(15, &small_hyper());
    zero_params(&mut b.critic_target);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let states: Vec<StateVector> = (0..16)
        .map(|_| StateVector(random_vec(&mut rng, small_cfg().state_dim())))
        .collect();
    let before = flat(&b.actor);
    let objective = b.update_actor(&states.iter().collect::<Vec<_>>()).unwrap();
    assert_eq!(objective, 0.0);
    assert_eq!(flat(&b.actor), before);
    assert!(b.update_actor(&states.iter().take(3).collect::<Vec<_>>()).is_err());
}

#[test]
fn actor_gradient_matches_finite_differences() {
    for source in [CriticSource::Target, CriticSource::Train] {
        let hyper = Hyperparams {
            actor_grad_critic: source,
            ..small_hyper()
        };
        let mut b = bundle(17, &hyper);
        // Make the two critics differ so the source choice matters.
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        b.critic = DenseNet::new(&critic_shape(&small_cfg(), 16), &mut rng).unwrap();
        let s = Array2::from_shape_fn((16, small_cfg().state_dim()), |_| rng.sample(StandardNormal));

        let (_, grads, _) = b.actor_objective_grad(s.view()).unwrap();
        let analytic: Vec<f64> = grads.slices().concat();
        let n = analytic.len();
        let h = 1e-5;
        for idx in (0..n).step_by(7) {
            let objective_at = |b: &mut AgentBundle, delta: f64| {
                let mut offset = idx;
                for slice in b.actor.param_slices_mut() {
                    if offset < slice.len() {
                        slice[offset] += delta;
                        break;
                    }
                    offset -= slice.len();
                }
                b.actor_objective_grad(s.view()).unwrap().0
            };
            let plus = objective_at(&mut b, h);
            let minus = objective_at(&mut b, -2.0 * h);
            objective_at(&mut b, h);
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-3, "{source:?} param {idx}: {a} vs {numeric}");
        }
    }
}

/// Single tanh layer on the state, no batch norm.
fn linear_actor(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> DenseNet {
    let (ds, da) = (cfg.state_dim(), cfg.action_dim());
    let layer = Layer {
        weight: Array2::from_shape_fn((ds, da), |_| rng.random_range(-0.3..0.3)),
        bias: Array1::from_shape_fn(da, |_| rng.random_range(-0.3..0.3)),
        norm: None,
        activation: Activation::Tanh,
    };
    DenseNet::from_layers(vec![layer], None).unwrap()
}

/// `q(s, a) = tanh(a₀ + 0.5) − tanh(a₀ − 1.5)`, a bump peaked at `a₀ = 0.5`.
fn bump_critic(cfg: &SystemConfig) -> DenseNet {
    let (ds, da) = (cfg.state_dim(), cfg.action_dim());
    let ignore_state = Layer {
        weight: Array2::zeros((ds, 1)),
        bias: Array1::zeros(1),
        norm: None,
        activation: Activation::Tanh,
    };
    let mut w = Array2::zeros((1 + da, 2));
    w[(1, 0)] = 1.0;
    w[(1, 1)] = 1.0;
    let bump = Layer {
        weight: w,
        bias: arr1(&[0.5, -1.5]),
        norm: None,
        activation: Activation::Tanh,
    };
    let head = Layer {
        weight: Array2::from_shape_vec((2, 1), vec![1.0, -1.0]).unwrap(),
        bias: Array1::zeros(1),
        norm: None,
        activation: Activation::Linear,
    };
    DenseNet::from_layers(vec![ignore_state, bump, head], Some((1, da))).unwrap()
}

#[test]
fn actor_climbs_toy_critic() {
    let cfg = small_cfg();
    let hyper = Hyperparams {
        mu_a: 0.01,
        ..small_hyper()
    };
    let mut b = bundle(19, &hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    b.actor = linear_actor(&cfg, &mut rng);
    b.critic_target = bump_critic(&cfg);

    let probe: Vec<Vec<f64>> = (0..64).map(|_| random_vec(&mut rng, cfg.state_dim())).collect();
    let gap = |b: &AgentBundle| {
        probe
            .iter()
            .map(|s| (b.actor.predict(s, None, Mode::Eval).unwrap()[0] - 0.5).abs())
            .sum::<f64>()
            / probe.len() as f64
    };
    let before = gap(&b);
    for _ in 0..1500 {
        let states: Vec<StateVector> = (0..16)
            .map(|_| StateVector(random_vec(&mut rng, cfg.state_dim())))
            .collect();
        b.update_actor(&states.iter().collect::<Vec<_>>()).unwrap();
    }
    let after = gap(&b);
    assert!(after < 0.05 && after < before / 4.0, "{before} -> {after}");
}

#[test]
fn soft_update_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let hyper = Hyperparams {
        tau_a: 1.0,
        tau_c: 1.0,
        ..small_hyper()
    };
    let mut b = bundle(22, &hyper);
    b.actor = DenseNet::new(&actor_shape(&small_cfg(), 16), &mut rng).unwrap();
    b.critic = DenseNet::new(&critic_shape(&small_cfg(), 16), &mut rng).unwrap();
    b.soft_update().unwrap();
    assert_eq!(flat(&b.actor_target), flat(&b.actor));
    assert_eq!(flat(&b.critic_target), flat(&b.critic));

    let mut b = bundle(22, &small_hyper());
    for s in b.actor.param_slices_mut() {
        s.fill(1.0);
    }
    zero_params(&mut b.actor_target);
    b.soft_update().unwrap();
    assert!(flat(&b.actor_target).iter().all(|&x| (x - 0.001).abs() < 1e-15));

    // τ = 0 is rejected by validation, so check the blend directly.
    let before = flat(&b.critic_target);
    b.critic_target.soft_update_from(&b.critic.clone(), 0.0).unwrap();
    assert_eq!(flat(&b.critic_target), before);
}

#[test]
fn one_step_episode_stays_below_warmup() {
    let hyper = Hyperparams {
        steps_per_episode: 1,
        ..small_hyper()
    };
    let mut b = bundle(23, &hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let ch = generate_channels(&small_cfg(), &mut rng);
    let actor = flat(&b.actor);
    let critic = flat(&b.critic);
    let log = run_episode(&mut b, &ch, &mut rng).unwrap();
    assert_eq!(b.replay.len(), 1);
    assert_eq!(log.updates, 0);
    assert_eq!(flat(&b.actor), actor);
    assert_eq!(flat(&b.critic), critic);
}

#[test]
fn episode_tracks_best_reward() {
    let mut b = bundle(25, &small_hyper());
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let ch = generate_channels(&small_cfg(), &mut rng);
    let log = run_episode(&mut b, &ch, &mut rng).unwrap();
    assert_eq!(log.rewards.len(), 50);
    assert_eq!(log.updates, 50 - 32 + 1);
    assert_eq!(b.best_reward, log.best_reward());
    assert!(log.best_so_far.windows(2).all(|w| w[0] <= w[1]));
    let best = b.best_action.as_ref().unwrap();
    let rate = crate::env::sum_rate(best, &ch, 1.0).unwrap();
    assert_eq!(rate, b.best_reward);
    assert_eq!(b.replay.len(), 50);
}

#[test]
fn episodes_are_reproducible() {
    let run = || {
        let mut b = bundle(27, &small_hyper());
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let ch = generate_channels(&small_cfg(), &mut rng);
        run_episode(&mut b, &ch, &mut rng).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let bits = |l: &EpisodeLog| l.rewards.iter().map(|r| r.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn state_independent_policy_gives_constant_rewards() {
    let hyper = Hyperparams {
        exploration_std: 0.0,
        steps_per_episode: 20,
        warmup_steps: 1000,
        ..small_hyper()
    };
    let mut b = bundle(29, &hyper);
    for s in b.actor.param_slices_mut().into_iter().take(1) {
        s.fill(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let ch = generate_channels(&small_cfg(), &mut rng);
    let log = run_episode(&mut b, &ch, &mut rng).unwrap();
    assert!(log.rewards.iter().all(|&r| r == log.rewards[0]));
}

#[test]
fn early_stop_ends_a_stalled_episode() {
    let hyper = Hyperparams {
        exploration_std: 0.0,
        steps_per_episode: 200,
        warmup_steps: 1000,
        early_stop_window: Some(10),
        ..small_hyper()
    };
    let mut b = bundle(31, &hyper);
    for s in b.actor.param_slices_mut().into_iter().take(1) {
        s.fill(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let ch = generate_channels(&small_cfg(), &mut rng);
    let log = run_episode(&mut b, &ch, &mut rng).unwrap();
    assert!(log.stopped_early);
    assert_eq!(log.rewards.len(), 11);
}

#[test]
fn training_redraws_channels_each_episode() {
    let hyper = Hyperparams {
        episodes: 2,
        steps_per_episode: 3,
        ..small_hyper()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let out = train(&small_cfg(), &hyper, &mut rng).unwrap();
    assert_eq!(out.channels.len(), 2);
    assert_ne!(out.channels[0].h1, out.channels[1].h1);
    assert_eq!(out.summary.instant.len(), 6);
    assert_eq!(out.summary.episode_starts, vec![0, 3]);
    let best = out.summary.instant.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.summary.best_reward, best);
    assert!(out.summary.best_so_far.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn single_episode_training_matches_run_episode() {
    let hyper = Hyperparams {
        steps_per_episode: 40,
        ..small_hyper()
    };
    let cfg = small_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let out = train(&cfg, &hyper, &mut rng).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut b = AgentBundle::new(&cfg, &hyper, &mut rng).unwrap();
    let ch = generate_channels(&cfg, &mut rng);
    let log = run_episode(&mut b, &ch, &mut rng).unwrap();
    assert_eq!(out.summary.instant, log.rewards);
}

#[test]
fn fixed_channel_training_reuses_the_realization() {
    let hyper = Hyperparams {
        episodes: 3,
        steps_per_episode: 4,
        ..small_hyper()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let ch = generate_channels(&small_cfg(), &mut rng);
    let out = train_on_channels(&small_cfg(), &hyper, &ch, &mut rng).unwrap();
    assert!(out.channels.iter().all(|c| c.h1 == ch.h1 && c.h2 == ch.h2));
    let best = crate::env::sum_rate(&out.summary.best_action, &ch, 1.0).unwrap();
    assert_eq!(best, out.summary.best_reward);
}
