//! Plain TD3 written out step by step, kept as a reference for the
//! combined agent with both extensions disabled.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::AgentConfig;
use super::ctd3::init_networks;
use super::objectives::{actor_objective_and_grad, critic_loss_and_grad, Actor, Policy};
use super::report::StepReport;
use crate::env::EnvSpec;
use crate::error::Result;
use crate::nn::{soft_update, AdamState, Mlp, Tensor2};
use crate::replay::{Batch, RingBuffer, Transition};

#[derive(Clone, Debug)]
pub struct Td3Agent {
    config: AgentConfig,
    spec: EnvSpec,
    actor: Actor,
    actor_target: Mlp,
    actor_opt: AdamState,
    q1: Mlp,
    q2: Mlp,
    q1_target: Mlp,
    q2_target: Mlp,
    q1_opt: AdamState,
    q2_opt: AdamState,
    buffer: RingBuffer<Transition>,
    t: u64,
}

impl Td3Agent {
    /// Draws networks from `rng` exactly as the combined agent does.
    /// The `adcf`, `idem`, cutoff and schedule settings are ignored.
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, spec: &EnvSpec, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (actor_net, q1, q2, _) = init_networks(&config, spec, false, rng)?;
        Ok(Self {
            actor_target: actor_net.clone(),
            actor_opt: AdamState::new(actor_net.param_count()),
            actor: Actor::new(actor_net, spec)?,
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            q1_opt: AdamState::new(q1.param_count()),
            q2_opt: AdamState::new(q2.param_count()),
            q1,
            q2,
            buffer: RingBuffer::new(config.main_capacity),
            spec: spec.clone(),
            config,
            t: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critics(&self) -> [&Mlp; 2] {
        [&self.q1, &self.q2]
    }

    pub fn critic_targets(&self) -> [&Mlp; 2] {
        [&self.q1_target, &self.q2_target]
    }

    pub fn buffer(&self) -> &RingBuffer<Transition> {
        &self.buffer
    }

    pub fn select_action<R: Rng + ?Sized>(&self, obs: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor.act(obs)?;
        if explore {
            for (v, h) in a.iter_mut().zip(self.actor.half_range()) {
                let z: f64 = rng.sample(StandardNormal);
                *v += self.config.exploration_noise * h * z;
            }
            self.spec.clamp(&mut a);
        }
        Ok(a)
    }

    pub fn train_step<R: Rng + ?Sized>(&mut self, transition: Transition, rng: &mut R) -> Result<StepReport> {
        self.t += 1;
        let t = self.t;
        self.buffer.push(transition);
        let mut report = StepReport::idle(t);
        let n = self.config.batch_size;
        if t <= self.config.warmup {
            return Ok(report);
        }
        if self.buffer.len() < n {
            report.critic_skipped = true;
            return Ok(report);
        }
        let batch = Batch::from_transitions(&self.buffer.sample(n, rng)?)?;

        // y = r + gamma * min(Q1'(s', a'), Q2'(s', a')) with smoothed a'
        let mut next_a = self.actor_target.forward_batch(&batch.next_states)?;
        let center = self.spec.action_center();
        let half = self.spec.action_half_range();
        for i in 0..n {
            let row = next_a.row_mut(i);
            for j in 0..row.len() {
                let z: f64 = rng.sample(StandardNormal);
                let eps = (self.config.target_noise * z).clamp(-self.config.noise_clip, self.config.noise_clip);
                row[j] = center[j] + half[j] * row[j] + eps;
            }
            self.spec.clamp(row);
        }
        let next_in = Tensor2::hcat(&batch.next_states, &next_a)?;
        let tq1 = self.q1_target.forward_batch(&next_in)?;
        let tq2 = self.q2_target.forward_batch(&next_in)?;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = if batch.terminal[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + self.config.gamma_q * tq1.data()[i].min(tq2.data()[i])
            };
        }

        let inputs = Tensor2::hcat(&batch.states, &batch.actions)?;
        let (l1, g1) = critic_loss_and_grad(&self.q1, &inputs, &y)?;
        self.q1_opt.step(self.q1.params_mut(), &g1, self.config.critic_lr)?;
        let (l2, g2) = critic_loss_and_grad(&self.q2, &inputs, &y)?;
        self.q2_opt.step(self.q2.params_mut(), &g2, self.config.critic_lr)?;
        report.loss_q1 = Some(l1);
        report.loss_q2 = Some(l2);
        report.learned = true;

        if t % self.config.policy_delay == 0 {
            let (j, g) = actor_objective_and_grad(&self.actor, &self.q1, None, &batch.states)?;
            self.actor_opt.ascend(self.actor.net_mut().params_mut(), &g, self.config.actor_lr)?;
            soft_update(&mut self.actor_target, self.actor.net(), self.config.tau)?;
            report.actor_j = Some(j);
        }
        soft_update(&mut self.q1_target, &self.q1, self.config.tau)?;
        soft_update(&mut self.q2_target, &self.q2, self.config.tau)?;
        Ok(report)
    }
}
