//! DDPG optimizer for the joint beamforming / phase-shift design.
//!
//! The agent is used as a per-channel optimizer: within an episode the
//! channels are fixed, the actor proposes `(G, Φ)`, the environment returns the
//! sum rate as reward, and the best action seen is kept.

mod replay;
mod train;

pub use replay::{Experience, ReplayBuffer};
pub use train::{run_episode, train, train_on_channels, EpisodeLog, TrainOutcome};

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{decode_action, ActionVector, JointAction, StateVector, SystemConfig};
use crate::error::{Error, Result};
use crate::nn::{default_hidden_width, Activation, AdamState, DenseNet, Mode, NetShape, WhitenState};

/// Which critic supplies `∇_a q` for the actor update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticSource {
    Target,
    Train,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub mu_c: f64,
    pub mu_a: f64,
    pub tau_c: f64,
    pub tau_a: f64,
    pub lambda_c: f64,
    pub lambda_a: f64,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub minibatch: usize,
    pub sync_every: usize,
    /// Std of the Gaussian noise added to the raw actor output.
    pub exploration_std: f64,
    /// Per-episode multiplicative annealing of `exploration_std`.
    pub exploration_decay: f64,
    pub warmup_steps: usize,
    /// Hidden width for both nets; `None` selects [`default_hidden_width`].
    pub hidden_width: Option<usize>,
    pub actor_grad_critic: CriticSource,
    /// Stop an episode when the best reward has not improved by more than
    /// `1e-4` within this many steps. Disabled when `None`.
    pub early_stop_window: Option<usize>,
}

impl Default for Hyperparams {
    /// Table-style defaults: `γ = 0.99`, learning rates `1e-3`, soft-update
    /// rates `1e-3`, decay `1e-5`, `D = 100000`, `N = 5000`, `T = 20000`,
    /// `W = 16`, `U = 1`.
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            mu_c: 0.001,
            mu_a: 0.001,
            tau_c: 0.001,
            tau_a: 0.001,
            lambda_c: 0.00001,
            lambda_a: 0.00001,
            buffer_capacity: 100_000,
            episodes: 5000,
            steps_per_episode: 20_000,
            minibatch: 16,
            sync_every: 1,
            exploration_std: 0.1,
            exploration_decay: 0.99,
            warmup_steps: 32,
            hidden_width: None,
            actor_grad_critic: CriticSource::Target,
            early_stop_window: None,
        }
    }
}

impl Hyperparams {
    /// Default hyperparameters with a desk-sized budget (20 episodes of 5000
    /// steps).
    pub fn desk_scale() -> Self {
        Hyperparams {
            episodes: 20,
            steps_per_episode: 5000,
            ..Hyperparams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        unit("tau_c", self.tau_c)?;
        unit("tau_a", self.tau_a)?;
        for (name, v) in [("mu_c", self.mu_c), ("mu_a", self.mu_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("lambda_c", self.lambda_c), ("lambda_a", self.lambda_a)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.exploration_std < 0.0 || !self.exploration_std.is_finite() {
            return Err(Error::Config("exploration_std must be non-negative".into()));
        }
        if !(self.exploration_decay > 0.0 && self.exploration_decay <= 1.0) {
            return Err(Error::Config("exploration_decay must lie in (0, 1]".into()));
        }
        let counts = [
            ("buffer_capacity", self.buffer_capacity),
            ("episodes", self.episodes),
            ("steps_per_episode", self.steps_per_episode),
            ("minibatch", self.minibatch),
            ("sync_every", self.sync_every),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.minibatch > self.buffer_capacity {
            return Err(Error::Config(format!(
                "minibatch {} exceeds buffer capacity {}",
                self.minibatch, self.buffer_capacity
            )));
        }
        if self.early_stop_window == Some(0) {
            return Err(Error::Config("early_stop_window must be positive".into()));
        }
        Ok(())
    }
}

/// Actor and critic (training and target copies), their optimizers, input
/// standardization, replay memory and the best action found so far.
#[derive(Clone, Debug)]
pub struct AgentBundle {
    pub cfg: SystemConfig,
    pub hyper: Hyperparams,
    pub actor: DenseNet,
    pub actor_target: DenseNet,
    pub critic: DenseNet,
    pub critic_target: DenseNet,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub whiten: WhitenState,
    pub replay: ReplayBuffer,
    pub best_reward: f64,
    pub best_action: Option<JointAction>,
    /// Environment steps taken across all episodes.
    pub total_steps: u64,
    pub episodes_done: usize,
}

pub fn actor_shape(cfg: &SystemConfig, width: usize) -> NetShape {
    NetShape {
        input_dim: cfg.state_dim(),
        hidden: vec![width, width],
        output_dim: cfg.action_dim(),
        output_activation: Activation::Tanh,
        aux: None,
    }
}

/// The action enters at the input of the second hidden layer.
pub fn critic_shape(cfg: &SystemConfig, width: usize) -> NetShape {
    NetShape {
        input_dim: cfg.state_dim(),
        hidden: vec![width, width],
        output_dim: 1,
        output_activation: Activation::Linear,
        aux: Some((1, cfg.action_dim())),
    }
}

fn rows(batch: &[&[f64]], width: usize) -> Array2<f64> {
    Array2::from_shape_fn((batch.len(), width), |(i, j)| batch[i][j])
}

impl AgentBundle {
    pub fn new<R: Rng + ?Sized>(cfg: &SystemConfig, hyper: &Hyperparams, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        hyper.validate()?;
        let (ds, da) = (cfg.state_dim(), cfg.action_dim());
        let width = hyper.hidden_width.unwrap_or_else(|| default_hidden_width(ds, da));
        if width <= ds.max(da) {
            return Err(Error::Config(format!(
                "hidden width {width} must exceed max(D_s, D_a) = {}",
                ds.max(da)
            )));
        }
        let actor = DenseNet::new(&actor_shape(cfg, width), rng)?;
        let critic = DenseNet::new(&critic_shape(cfg, width), rng)?;
        Ok(AgentBundle {
            cfg: cfg.clone(),
            hyper: hyper.clone(),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt: AdamState::new(hyper.mu_a, hyper.lambda_a),
            critic_opt: AdamState::new(hyper.mu_c, hyper.lambda_c),
            whiten: WhitenState::new(ds),
            replay: ReplayBuffer::new(hyper.buffer_capacity)?,
            best_reward: f64::NEG_INFINITY,
            best_action: None,
            total_steps: 0,
            episodes_done: 0,
        })
    }

    /// Exploration std for the current episode.
    pub fn current_exploration_std(&self) -> f64 {
        self.hyper.exploration_std * self.hyper.exploration_decay.powi(self.episodes_done as i32)
    }

    /// Standardizes a raw observation, updating the running moments.
    pub fn observe(&mut self, state: &StateVector) -> Result<StateVector> {
        Ok(StateVector(self.whiten.apply(state.as_slice(), true)?))
    }

    /// Actor output on a standardized observation, optionally perturbed by
    /// Gaussian noise of std `noise_std`, and its feasible projection.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        obs: &StateVector,
        rng: &mut R,
        noise_std: f64,
    ) -> Result<(ActionVector, JointAction)> {
        let mut raw = self.actor.predict(obs.as_slice(), None, Mode::Eval)?;
        if noise_std > 0.0 {
            for x in &mut raw {
                let z: f64 = rng.sample(StandardNormal);
                *x += noise_std * z;
            }
        }
        let raw = ActionVector(raw);
        let projected = decode_action(&raw, &self.cfg)?;
        Ok((raw, projected))
    }

    fn target_values(&self, rewards: &[f64], next_states: ArrayView2<f64>) -> Result<Vec<f64>> {
        let (next_actions, _) = self.actor_target.forward(next_states, None, Mode::Eval)?;
        let (q, _) = self
            .critic_target
            .forward(next_states, Some(next_actions.view()), Mode::Eval)?;
        Ok(rewards
            .iter()
            .zip(q.column(0))
            .map(|(r, q)| r + self.hyper.gamma * q)
            .collect())
    }

    /// `y = r + γ · q_target(s', actor_target(s'))`.
    pub fn critic_target_value(&self, reward: f64, next_obs: &StateVector) -> Result<f64> {
        let s = ArrayView2::from_shape((1, next_obs.len()), next_obs.as_slice())
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.target_values(&[reward], s)?[0])
    }

    /// One Adam step on the training critic against the TD targets of the
    /// batch. Returns the pre-update mean squared TD error.
    pub fn update_critic(&mut self, batch: &[&Experience]) -> Result<f64> {
        if batch.len() < self.hyper.minibatch {
            return Err(Error::Contract(format!(
                "critic update needs {} experiences, got {}",
                self.hyper.minibatch,
                batch.len()
            )));
        }
        let (ds, da) = (self.cfg.state_dim(), self.cfg.action_dim());
        let states = rows(&batch.iter().map(|e| e.state.as_slice()).collect::<Vec<_>>(), ds);
        let actions = rows(&batch.iter().map(|e| e.action.as_slice()).collect::<Vec<_>>(), da);
        let next = rows(&batch.iter().map(|e| e.next_state.as_slice()).collect::<Vec<_>>(), ds);
        let rewards: Vec<f64> = batch.iter().map(|e| e.reward).collect();
        let targets = self.target_values(&rewards, next.view())?;

        let (q, cache) = self.critic.forward(states.view(), Some(actions.view()), Mode::Train)?;
        let b = batch.len() as f64;
        let mut loss = 0.0;
        let mut dq = Array2::zeros((batch.len(), 1));
        for (i, y) in targets.iter().enumerate() {
            let err = q[(i, 0)] - y;
            loss += err * err / b;
            dq[(i, 0)] = 2.0 * err / b;
        }
        let back = self.critic.backward(&cache, dq.view())?;
        self.critic.update_running_stats(&cache)?;
        self.critic_opt.apply(&mut self.critic, &back.grads)?;
        Ok(loss)
    }

    /// Gradient of `mean_b q(s_b, actor(s_b))` with respect to the actor
    /// parameters, together with the objective value. The actor runs in
    /// train mode, the critic in eval mode.
    pub fn actor_objective_grad(
        &self,
        states: ArrayView2<f64>,
    ) -> Result<(f64, crate::nn::Gradients, crate::nn::ForwardCache)> {
        let critic = match self.hyper.actor_grad_critic {
            CriticSource::Target => &self.critic_target,
            CriticSource::Train => &self.critic,
        };
        let b = states.nrows();
        let (actions, actor_cache) = self.actor.forward(states, None, Mode::Train)?;
        let (q, critic_cache) = critic.forward(states, Some(actions.view()), Mode::Eval)?;
        let objective = q.sum() / b as f64;
        let seed = Array2::from_elem((b, 1), 1.0 / b as f64);
        let critic_back = critic.backward(&critic_cache, seed.view())?;
        let da = critic_back
            .aux_grad
            .ok_or_else(|| Error::Contract("critic returned no action gradient".into()))?;
        let actor_back = self.actor.backward(&actor_cache, da.view())?;
        Ok((objective, actor_back.grads, actor_cache))
    }

    /// One Adam ascent step on the actor. Returns the pre-update objective.
    pub fn update_actor(&mut self, states: &[&StateVector]) -> Result<f64> {
        if states.len() < self.hyper.minibatch {
            return Err(Error::Contract(format!(
                "actor update needs {} states, got {}",
                self.hyper.minibatch,
                states.len()
            )));
        }
        let s = rows(&states.iter().map(|s| s.as_slice()).collect::<Vec<_>>(), self.cfg.state_dim());
        let (objective, mut grads, cache) = self.actor_objective_grad(s.view())?;
        // Ascent on q: descend the negated gradient.
        for layer in &mut grads.layers {
            layer.weight.mapv_inplace(|g| -g);
            layer.bias.mapv_inplace(|g| -g);
            if let Some(g) = &mut layer.gamma {
                g.mapv_inplace(|g| -g);
            }
            if let Some(g) = &mut layer.beta {
                g.mapv_inplace(|g| -g);
            }
        }
        self.actor.update_running_stats(&cache)?;
        self.actor_opt.apply(&mut self.actor, &grads)?;
        Ok(objective)
    }

    /// Convex blend of training into target parameters for both nets.
    pub fn soft_update(&mut self) -> Result<()> {
        self.critic_target.soft_update_from(&self.critic, self.hyper.tau_c)?;
        self.actor_target.soft_update_from(&self.actor, self.hyper.tau_a)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
