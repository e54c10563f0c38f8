use std::time::Instant;

use rand::Rng;

use super::{AgentBundle, Experience, Hyperparams};
use crate::env::{build_state, env_step, generate_channels, init_action, ChannelSet, SystemConfig};
use crate::error::Result;
use crate::harness::{average_reward, RunSummary};

/// Per-step record of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub rewards: Vec<f64>,
    /// Best reward seen by the bundle after each step (global, not per episode).
    pub best_so_far: Vec<f64>,
    pub critic_losses: Vec<f64>,
    pub actor_objectives: Vec<f64>,
    pub updates: usize,
    pub stopped_early: bool,
}

impl EpisodeLog {
    pub fn best_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs up to `T` steps on fixed channels, starting from the identity action.
pub fn run_episode<R: Rng + ?Sized>(
    bundle: &mut AgentBundle,
    channels: &ChannelSet,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let cfg = bundle.cfg.clone();
    let hyper = bundle.hyper.clone();
    let noise_std = bundle.current_exploration_std();
    let ready_at = hyper.warmup_steps.max(hyper.minibatch);

    let mut log = EpisodeLog {
        rewards: Vec::with_capacity(hyper.steps_per_episode),
        best_so_far: Vec::with_capacity(hyper.steps_per_episode),
        critic_losses: Vec::new(),
        actor_objectives: Vec::new(),
        updates: 0,
        stopped_early: false,
    };

    let first = build_state(&init_action(&cfg), channels, &cfg)?;
    let mut obs = bundle.observe(&first)?;
    let mut last_improvement = 0usize;
    let mut best_in_window = f64::NEG_INFINITY;

    for t in 0..hyper.steps_per_episode {
        let (raw, action) = bundle.select_action(&obs, rng, noise_std)?;
        let (reward, next_state) = env_step(&action, channels, &cfg)?;
        let next_obs = bundle.observe(&next_state)?;
        bundle.replay.push(Experience {
            state: obs,
            action: raw,
            reward,
            next_state: next_obs.clone(),
        });
        bundle.total_steps += 1;

        if bundle.replay.len() >= ready_at {
            let batch: Vec<Experience> = bundle
                .replay
                .sample(rng, hyper.minibatch)?
                .into_iter()
                .cloned()
                .collect();
            let refs: Vec<&Experience> = batch.iter().collect();
            log.critic_losses.push(bundle.update_critic(&refs)?);
            let states: Vec<_> = batch.iter().map(|e| &e.state).collect();
            log.actor_objectives.push(bundle.update_actor(&states)?);
            if bundle.total_steps.is_multiple_of(hyper.sync_every as u64) {
                bundle.soft_update()?;
            }
            log.updates += 1;
        }

        if reward > bundle.best_reward {
            bundle.best_reward = reward;
            bundle.best_action = Some(action);
        }
        log.rewards.push(reward);
        log.best_so_far.push(bundle.best_reward);
        obs = next_obs;

        if let Some(window) = hyper.early_stop_window {
            if reward > best_in_window + 1e-4 {
                best_in_window = reward;
                last_improvement = t;
            } else if t - last_improvement >= window {
                log.stopped_early = true;
                break;
            }
        }
    }
    bundle.episodes_done += 1;
    Ok(log)
}

/// Result of a full training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub summary: RunSummary,
    pub bundle: AgentBundle,
    /// Channels of every episode, in order.
    pub channels: Vec<ChannelSet>,
}

/// `N` episodes, drawing fresh channels at the start of each.
pub fn train<R: Rng + ?Sized>(cfg: &SystemConfig, hyper: &Hyperparams, rng: &mut R) -> Result<TrainOutcome> {
    run_training(cfg, hyper, rng, |rng| generate_channels(cfg, rng))
}

/// `N` episodes on one fixed channel realization: the agent as a per-CSI
/// optimizer.
pub fn train_on_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    hyper: &Hyperparams,
    channels: &ChannelSet,
    rng: &mut R,
) -> Result<TrainOutcome> {
    channels.check_against(cfg)?;
    run_training(cfg, hyper, rng, |_| channels.clone())
}

fn run_training<R, F>(cfg: &SystemConfig, hyper: &Hyperparams, rng: &mut R, mut next_channels: F) -> Result<TrainOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> ChannelSet,
{
    let started = Instant::now();
    let mut bundle = AgentBundle::new(cfg, hyper, rng)?;
    let mut instant = Vec::new();
    let mut best = Vec::new();
    let mut episode_starts = Vec::with_capacity(hyper.episodes);
    let mut all_channels = Vec::with_capacity(hyper.episodes);
    for _ in 0..hyper.episodes {
        let channels = next_channels(rng);
        episode_starts.push(instant.len());
        let log = run_episode(&mut bundle, &channels, rng)?;
        instant.extend_from_slice(&log.rewards);
        best.extend_from_slice(&log.best_so_far);
        all_channels.push(channels);
    }
    let average = average_reward(&instant)?;
    let best_action = bundle
        .best_action
        .clone()
        .expect("at least one step was taken");
    let summary = RunSummary {
        instant,
        average,
        best_so_far: best,
        episode_starts,
        best_reward: bundle.best_reward,
        best_action,
        wall_ms: started.elapsed().as_millis(),
        seed: cfg.seed,
        config: cfg.clone(),
    };
    Ok(TrainOutcome {
        summary,
        bundle,
        channels: all_channels,
    })
}
